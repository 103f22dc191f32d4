"""Central numeric tolerance table.

Every tolerance used by the library lives here and is echoed verbatim into
run manifests, so an output directory always records the constants it was
produced under.
"""

# Atoms closer than this (per coordinate, absolute) are merged into one.
ATOM_MERGE_TOL = 1e-12

# Weight vectors must sum to one within this bound.
WEIGHT_SUM_TOL = 1e-12

# Coupling marginals must match the endpoint weights within this (absolute).
MARGINAL_TOL = 1e-9

# Relative optimality slack for transport costs: tol * (1 + cost scale).
COST_REL_TOL = 1e-9

# Reduced-cost threshold identifying the optimal face of the transport
# polytope, relative to (1 + max |cost entry|).
FACE_REL_TOL = 1e-9

# Compatibility tolerance when matching atoms to interpolated plan positions.
COMPAT_TOL = 1e-9

# Constant-speed check for geodesics.
GEODESIC_TOL = 1e-7

# Slack for dissipativity certificates: pass iff residual <= CERT_TOL*(1+W2sq).
CERT_TOL = 1e-7

# Slack for trajectory checks (discrete EVI, contraction, Cauchy envelopes).
CHECK_TOL = 1e-7

# Default one-sided finite-difference step for Dini derivatives.
DINI_H = 1e-3

# Default atom budget for trajectory support growth.
ATOM_BUDGET = 200_000


def as_dict() -> dict:
    """Tolerance table as a plain dict (for manifests)."""
    return {
        "atom_merge_tol": ATOM_MERGE_TOL,
        "weight_sum_tol": WEIGHT_SUM_TOL,
        "marginal_tol": MARGINAL_TOL,
        "cost_rel_tol": COST_REL_TOL,
        "face_rel_tol": FACE_REL_TOL,
        "compat_tol": COMPAT_TOL,
        "geodesic_tol": GEODESIC_TOL,
        "cert_tol": CERT_TOL,
        "check_tol": CHECK_TOL,
        "dini_h": DINI_H,
        "atom_budget": ATOM_BUDGET,
    }
