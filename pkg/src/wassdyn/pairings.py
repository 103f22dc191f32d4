"""Duality pairings between velocity measures and one-sided derivatives of
the squared Wasserstein distance.

``pairing_r`` / ``pairing_l`` are the min / max of the bilinear form
sum <x0 - x1, v0 - v1> over couplings whose position marginal is an optimal
plan; against a plain measure the second velocity is zero.  They equal the
right / left derivatives of t -> 0.5 W2^2 under the free-motion deformation
of the arguments, which ``dini_w2`` estimates by one-sided differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import (DiscreteMeasure, VelocityMeasure, MeasureError,
                       x_marginal, zero_velocity_lift)
from .tolerances import COMPAT_TOL, DINI_H, MARGINAL_TOL
from .transport import Coupling, TransportError, lexi_transport_lp, w2, geodesic_point
from . import _kernels


@dataclass(frozen=True)
class PairingResult:
    """Value of a duality pairing plus a coupling that attains it.

    The optimizer need not be unique (several vertices of the optimal face
    can share the extremal value); the witness is the deterministic first
    vertex reached by the solver's pivoting order.
    """

    value: float
    witness: Coupling
    side: str  # "right" or "left"


def pairing_r(phi0: VelocityMeasure, phi1: VelocityMeasure, backend=None) -> PairingResult:
    """Right pairing: min of sum <x0-x1, v0-v1> over admissible couplings."""
    value, plan = lexi_transport_lp(phi0, phi1, "min", backend=backend)
    return PairingResult(value=value, witness=plan, side="right")


def pairing_l(phi0: VelocityMeasure, phi1: VelocityMeasure, backend=None) -> PairingResult:
    """Left pairing: max of the same bilinear form."""
    value, plan = lexi_transport_lp(phi0, phi1, "max", backend=backend)
    return PairingResult(value=value, witness=plan, side="left")


def pairing_r_nu(phi: VelocityMeasure, nu: DiscreteMeasure, backend=None) -> PairingResult:
    """Right pairing against a measure: pair with its zero-velocity lift."""
    if phi.dim != nu.dim:
        raise MeasureError(f"dimension mismatch: {phi.dim} vs {nu.dim}")
    return pairing_r(phi, zero_velocity_lift(nu), backend=backend)


def pairing_l_nu(phi: VelocityMeasure, nu: DiscreteMeasure, backend=None) -> PairingResult:
    if phi.dim != nu.dim:
        raise MeasureError(f"dimension mismatch: {phi.dim} vs {nu.dim}")
    return pairing_l(phi, zero_velocity_lift(nu), backend=backend)


def _entry_positions(gamma: Coupling):
    x0 = gamma.row_measure.points[gamma.rows]
    x1 = gamma.col_measure.points[gamma.cols]
    return x0, x1


def directional_pairing(phi: VelocityMeasure, gamma: Coupling, t: float,
                        side: str = "right", backend=None) -> PairingResult:
    """Pairing of phi against the direction of a plan at interpolation time t.

    Couples the atoms of phi with the entries of ``gamma`` subject to the
    compatibility (1-t) x0 + t x1 = x (within COMPAT_TOL); minimizes
    (right) or maximizes (left) sum <x0 - x1, v> over such couplings.  The
    problem decomposes into independent blocks, one per interpolated
    position.
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    if not 0.0 <= t <= 1.0:
        raise TransportError(f"t={t} outside [0, 1]")
    ker = backend if backend is not None else _kernels.load_active()
    base = geodesic_point(gamma, t)  # validates optimality of the plan
    marg = x_marginal(phi)
    if not marg.same_atoms(base, tol=COMPAT_TOL, wtol=MARGINAL_TOL):
        raise TransportError("x-marginal of phi does not match the plan at time t")

    x0, x1 = _entry_positions(gamma)
    z = (1.0 - t) * x0 + t * x1

    # assign phi atoms and plan entries to interpolated-position groups
    def group_of(points):
        ids = np.empty(points.shape[0], dtype=np.intp)
        for k, q in enumerate(points):
            lo = int(np.searchsorted(marg.points[:, 0], q[0] - 10 * COMPAT_TOL))
            hi = int(np.searchsorted(marg.points[:, 0], q[0] + 10 * COMPAT_TOL, side="right"))
            hit = -1
            for i in range(lo, hi):
                if np.max(np.abs(marg.points[i] - q)) <= 10 * COMPAT_TOL:
                    hit = i
                    break
            if hit < 0:
                raise TransportError("plan entry incompatible with the atoms of phi")
            ids[k] = hit
        return ids

    atom_group = group_of(phi.x)
    entry_group = group_of(z)

    sign = 1.0 if side == "right" else -1.0
    direction = x0 - x1
    total = 0.0
    wit_rows, wit_cols, wit_mass = [], [], []
    for g in range(marg.n):
        aidx = np.nonzero(atom_group == g)[0]
        eidx = np.nonzero(entry_group == g)[0]
        wa = phi.weights[aidx]
        wb = gamma.mass[eidx]
        if abs(wa.sum() - wb.sum()) > MARGINAL_TOL:
            raise TransportError("mass imbalance between phi atoms and plan entries")
        cost = sign * (phi.v[aidx] @ direction[eidx].T)
        sol = ker.solve_transport(wa, wb, cost)
        total += sign * sol["objective"]
        wit_rows.append(aidx[sol["rows"]])
        wit_cols.append(eidx[sol["cols"]])
        wit_mass.append(sol["mass"])

    pair_points = np.hstack([x0, x1])
    pair_measure = DiscreteMeasure(pair_points, gamma.mass)
    rows = np.concatenate(wit_rows)
    cols_entry = np.concatenate(wit_cols)
    cols = _pair_atom_index(pair_measure.points, pair_points[cols_entry])
    witness = Coupling(phi, pair_measure, rows, cols, np.concatenate(wit_mass))
    return PairingResult(value=total, witness=witness, side=side)


def _pair_atom_index(atoms: np.ndarray, queries: np.ndarray) -> np.ndarray:
    idx = np.empty(queries.shape[0], dtype=np.intp)
    for k, q in enumerate(queries):
        lo = int(np.searchsorted(atoms[:, 0], q[0] - 1e-11))
        hi = int(np.searchsorted(atoms[:, 0], q[0] + 1e-11, side="right"))
        hit = -1
        for i in range(lo, hi):
            if np.max(np.abs(atoms[i] - q)) <= 1e-9:
                hit = i
                break
        if hit < 0:
            raise TransportError("plan entry lost during canonicalization")
        idx[k] = hit
    return idx


def dini_w2(curve, nu: DiscreteMeasure, t: float, side: str = "right",
            h: float = DINI_H) -> float:
    """One-sided difference quotient of 0.5 W2^2(mu_t, nu), Richardson
    extrapolated over steps h and h/2.

    ``curve`` is a callable t -> DiscreteMeasure or an object with ``.at``.
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    if h <= 0:
        raise ValueError("h must be positive")
    at = curve if callable(curve) else curve.at
    w0 = w2(at(t), nu).cost

    def quotient(step: float) -> float:
        if side == "right":
            return (w2(at(t + step), nu).cost - w0) / (2.0 * step)
        return (w0 - w2(at(t - step), nu).cost) / (2.0 * step)

    d1 = quotient(h)
    d2 = quotient(h / 2.0)
    return 2.0 * d2 - d1
