"""Seeded pairing-calculus property battery.

Runs the structural identities of the duality pairings on random instances:
order between right and left values, the cross-pairing inequality, the
velocity-negation identity, the shear-transform identity, midpoint
semi-concavity of the deformation cost, and (on tiny instances) agreement
with the exhaustive vertex-enumeration reference.  Used both by the test
suite and by the `pairing` command in suite mode.
"""

from __future__ import annotations

import numpy as np

from . import bruteforce
from .measures import (DiscreteMeasure, VelocityMeasure, lambda_transform,
                       negate, push_exp, second_moment, velocity_norm,
                       x_marginal)
from .pairings import pairing_l, pairing_l_nu, pairing_r, pairing_r_nu
from .transport import squared_distance_matrix, w2


def random_instance(seed, index: int, max_atoms: int = 6, max_dim: int = 3):
    """Two velocity measures plus a plain measure, all seeded by (seed, index)."""
    rng = np.random.default_rng([seed, index])
    d = int(rng.integers(1, max_dim + 1))

    def measure(n):
        pts = rng.uniform(-1.0, 1.0, size=(n, d))
        if index % 2 == 0:
            w = np.full(n, 1.0 / n)
        else:
            w = rng.uniform(0.2, 1.0, size=n)
            w = w / w.sum()
        return DiscreteMeasure(pts, w)

    def lift(mu):
        vel = rng.uniform(-1.0, 1.0, size=mu.points.shape)
        return VelocityMeasure(mu.points, vel, mu.weights)

    n0 = int(rng.integers(1, max_atoms + 1))
    n1 = int(rng.integers(1, max_atoms + 1))
    n2 = int(rng.integers(1, max_atoms + 1))
    phi0 = lift(measure(n0))
    phi1 = lift(measure(n1))
    nu = measure(n2)
    lam = float(rng.uniform(-2.0, 2.0))
    return phi0, phi1, nu, lam


def instance_rows(seed, index: int, max_atoms: int = 6, max_dim: int = 3,
                  oracle_atoms: int = 4):
    """Identity residuals for one instance as (check, lhs, rhs, excess) rows.

    Every row passes when its excess is <= 0; tolerances are already folded
    into the right-hand sides.
    """
    phi0, phi1, nu, lam = random_instance(seed, index, max_atoms, max_dim)
    mu0 = x_marginal(phi0)
    mu1 = x_marginal(phi1)
    rows = []

    r_val = pairing_r(phi0, phi1).value
    l_val = pairing_l(phi0, phi1).value
    scale = 1.0 + abs(r_val) + abs(l_val)
    rows.append(("order_r_le_l", r_val, l_val + 1e-9 * scale,
                 r_val - l_val - 1e-9 * scale))

    cross = pairing_r_nu(phi0, mu1).value + pairing_r_nu(phi1, mu0).value
    rows.append(("cross_inequality", cross, r_val + 1e-9 * scale,
                 cross - r_val - 1e-9 * scale))

    cross_l = pairing_l_nu(phi0, mu1).value + pairing_l_nu(phi1, mu0).value
    rows.append(("cross_inequality_left", l_val, cross_l + 1e-9 * scale,
                 l_val - cross_l - 1e-9 * scale))

    neg = -pairing_r(negate(phi0), negate(phi1)).value
    rows.append(("negation_identity", l_val, neg,
                 abs(l_val - neg) - 1e-9 * scale))

    w2sq = w2(mu0, mu1).cost
    sheared = pairing_r_nu(lambda_transform(phi0, lam), mu1).value
    base = pairing_r_nu(phi0, mu1).value
    predicted = base - 0.5 * lam * (second_moment(mu0) - second_moment(mu1) + w2sq)
    rows.append(("shear_identity", sheared, predicted,
                 abs(sheared - predicted) - 1e-8 * (1.0 + abs(predicted))))

    # midpoint semi-concavity of s -> 0.5 W2^2(push_exp(phi0, s), nu)
    rng = np.random.default_rng([seed, index, 7])
    s0, s1 = sorted(rng.uniform(-1.0, 1.0, size=2))
    sm = 0.5 * (s0 + s1)
    speed_sq = velocity_norm(phi0) ** 2

    def g(s):
        return 0.5 * w2(push_exp(phi0, s), nu).cost

    lhs = 0.5 * g(s0) + 0.5 * g(s1) - 0.125 * (s1 - s0) ** 2 * speed_sq
    rows.append(("midpoint_concavity", lhs, g(sm) + 1e-8,
                 lhs - g(sm) - 1e-8))

    if mu0.n <= oracle_atoms and mu1.n <= oracle_atoms:
        primary = squared_distance_matrix(phi0.x, phi1.x)
        dx = phi0.x[:, None, :] - phi1.x[None, :, :]
        dv = phi0.v[:, None, :] - phi1.v[None, :, :]
        secondary = np.einsum("ijk,ijk->ij", dx, dv)
        lo, hi = bruteforce.face_extrema(phi0.weights, phi1.weights,
                                         primary, secondary)
        tol = 1e-9 * (1.0 + abs(lo) + abs(hi))
        rows.append(("oracle_min", r_val, lo, abs(r_val - lo) - tol))
        rows.append(("oracle_max", l_val, hi, abs(l_val - hi) - tol))
    return rows


def run_suite(n_instances: int = 100, seed: int = 0, max_atoms: int = 6,
              max_dim: int = 3):
    """All rows over the instance battery plus the list of failing rows."""
    rows = []
    failures = []
    for index in range(n_instances):
        for check, lhs, rhs, excess in instance_rows(seed, index, max_atoms,
                                                     max_dim):
            rows.append((check, index, lhs, rhs, excess))
            if excess > 0:
                failures.append((check, index, lhs, rhs, excess))
    return rows, failures
