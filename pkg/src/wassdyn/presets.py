"""Built-in experiment configurations.

Each preset is a complete config for the runner; `wassdyn run --preset NAME`
executes it as-is (seed and output directory can be overridden on the
command line).
"""

PRESETS = {
    # median-splitting flow from a point mass; the scheme is step-exact here
    "splitting_dirac": {
        "command": "simulate",
        "field": {"kind": "splitting_particle"},
        "initial_measure": {"dirac": [0.0]},
        "numeric": {"tau": 0.125, "T": 1.0, "L": 2.0, "seed": 0},
        "reference": {"type": "splitting"},
    },
    # same flow from a 200-point uniform-law discretization
    "splitting_lebesgue": {
        "command": "simulate",
        "field": {"kind": "splitting_particle"},
        "initial_measure": {"uniform": {"a": 0.0, "b": 1.0, "n": 200}},
        "numeric": {"tau": 0.125, "T": 1.0, "L": 2.0, "seed": 0},
        "reference": {"type": "splitting"},
    },
    # +/-1 constant velocity distribution: error decays like sqrt(T tau)
    "constant_walk": {
        "command": "rate-study",
        "studies": [{
            "name": "constant_walk",
            "field": {"kind": "constant",
                      "theta": {"atoms": [[0.5, -1.0], [0.5, 1.0]]}},
            "initial_measure": {"dirac": [0.0]},
            "taus": [0.125, 0.0625, 0.03125, 0.015625, 0.0078125,
                     0.00390625, 0.001953125],
            "T": 1.0,
            "L": 1.5,
            "reference": {"type": "stationary"},
            "expect_slope": [0.48, 0.52],
        }],
        "numeric": {"seed": 0},
    },
    # planar rotation field on a disc discretization: pairings against a
    # generic measure vanish with the resolution
    "rotation_disc": {
        "command": "pairing",
        "mode": "single",
        "phi": {"field": {"kind": "rotation"}, "at": {"disc": {"n": 200}}},
        "against": {"atoms": [[0.5, 0.25, 0.1], [0.3, -0.4, 0.2], [0.2, 0.1, -0.6]]},
        "numeric": {"seed": 0},
    },
    # contraction toward the two-point target: distances shrink like e^{-t}.
    # The start straddles the target atoms so the barycentric selection
    # follows the geodesic flow (a point mass at the median would stay put).
    "geodesic_flow": {
        "command": "simulate",
        "field": {"kind": "toward_measure", "sign": 1.0,
                  "target": {"atoms": [[0.5, -1.0], [0.5, 1.0]]}},
        "initial_measure": {"atoms": [[0.5, -0.5], [0.5, 0.5]]},
        "numeric": {"tau": 0.01, "T": 1.0, "L": 2.0, "seed": 0},
        "reference": {"type": "geodesic",
                      "target": {"atoms": [[0.5, -1.0], [0.5, 1.0]]}},
    },
    # two-atom configuration whose optimal couplings disagree on the pairing
    "rhombus_pairing": {
        "command": "pairing",
        "mode": "single",
        "phi": {"velocity_atoms": [[0.5, 1.0, 0.0, 0.0, 1.0],
                                   [0.5, -1.0, 0.0, 0.0, -1.0]]},
        "against": {"atoms": [[0.5, 0.0, 1.0], [0.5, 0.0, -1.0]]},
        "numeric": {"seed": 0},
        "expect": {"right": -1.0, "left": 1.0, "tol": 1e-9},
    },
    # discontinuous one-dimensional decay field with unit-speed stop at zero
    "sign_filippov": {
        "command": "simulate",
        "field": {"kind": "per_particle_map", "map": "minus_sign"},
        "initial_measure": {"atoms": [[0.5, 2.0], [0.5, -1.0]]},
        "numeric": {"tau": 0.01, "T": 1.5, "L": 1.5, "seed": 0},
        "reference": {"type": "lift", "map": "minus_sign"},
    },
}


def list_presets():
    return sorted(PRESETS)
