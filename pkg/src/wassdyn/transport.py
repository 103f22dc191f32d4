"""Exact quadratic-cost optimal transport between discrete measures.

``w2`` returns the exact squared Wasserstein distance together with an
optimal vertex plan (network simplex; monotone sweep in one dimension).
``lexi_transport_lp`` solves the two-stage problem used by the duality
pairings: first reach the optimal quadratic cost, then optimize a bilinear
objective restricted to the optimal face of the transportation polytope.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .measures import DiscreteMeasure, VelocityMeasure, require_same_dim
from .tolerances import COST_REL_TOL, FACE_REL_TOL, MARGINAL_TOL


class TransportError(ValueError):
    """Invalid plan or transport inputs."""


def _positions(measure) -> np.ndarray:
    return measure.points if isinstance(measure, DiscreteMeasure) else measure.x


class Coupling:
    """Sparse joint-weight table between the atoms of two measures.

    Entries are (row index, column index, mass > 0); row and column sums must
    reproduce the endpoint weights within MARGINAL_TOL.
    """

    __slots__ = ("row_measure", "col_measure", "rows", "cols", "mass")

    def __init__(self, row_measure, col_measure, rows, cols, mass, validate=True):
        rows = np.ascontiguousarray(rows, dtype=np.intp)
        cols = np.ascontiguousarray(cols, dtype=np.intp)
        mass = np.ascontiguousarray(mass, dtype=float)
        if not (rows.shape == cols.shape == mass.shape):
            raise TransportError("entry arrays must share one length")
        if np.any(mass <= 0):
            raise TransportError("entries must carry positive mass")
        if validate:
            nr = row_measure.weights.shape[0]
            nc = col_measure.weights.shape[0]
            if rows.size and (rows.max() >= nr or cols.max() >= nc):
                raise TransportError("entry indices out of range")
            row_sums = np.bincount(rows, weights=mass, minlength=nr)
            col_sums = np.bincount(cols, weights=mass, minlength=nc)
            if np.max(np.abs(row_sums - row_measure.weights)) > MARGINAL_TOL:
                raise TransportError("row marginal mismatch")
            if np.max(np.abs(col_sums - col_measure.weights)) > MARGINAL_TOL:
                raise TransportError("column marginal mismatch")
        object.__setattr__(self, "row_measure", row_measure)
        object.__setattr__(self, "col_measure", col_measure)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "mass", mass)

    def __setattr__(self, name, value):
        raise AttributeError("Coupling is immutable")

    @property
    def n_entries(self) -> int:
        return self.rows.shape[0]

    def cost(self) -> float:
        """Quadratic transport cost of this plan."""
        dx = _positions(self.row_measure)[self.rows] - _positions(self.col_measure)[self.cols]
        return float(np.dot(self.mass, np.einsum("ij,ij->i", dx, dx)))

    def position_plan(self) -> "Coupling":
        """Project a plan between velocity measures onto the positions."""
        mu0 = (self.row_measure if isinstance(self.row_measure, DiscreteMeasure)
               else DiscreteMeasure(self.row_measure.x, self.row_measure.weights))
        mu1 = (self.col_measure if isinstance(self.col_measure, DiscreteMeasure)
               else DiscreteMeasure(self.col_measure.x, self.col_measure.weights))
        x0 = _positions(self.row_measure)[self.rows]
        x1 = _positions(self.col_measure)[self.cols]
        ri = _atom_index(mu0.points, x0)
        ci = _atom_index(mu1.points, x1)
        flat = ri * mu1.n + ci
        uniq, inv = np.unique(flat, return_inverse=True)
        mass = np.bincount(inv, weights=self.mass)
        return Coupling(mu0, mu1, uniq // mu1.n, uniq % mu1.n, mass)

    def __repr__(self):
        return f"Coupling(n_entries={self.n_entries})"


def _atom_index(atoms: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Index of each query row in a canonically sorted atom array."""
    idx = np.empty(queries.shape[0], dtype=np.intp)
    for k, q in enumerate(queries):
        # atoms are lexicographically sorted: bracket on the first coordinate,
        # then verify the full row
        lo = int(np.searchsorted(atoms[:, 0], q[0] - 1e-11))
        hi = int(np.searchsorted(atoms[:, 0], q[0] + 1e-11, side="right"))
        hit = -1
        for i in range(lo, hi):
            if np.max(np.abs(atoms[i] - q)) <= 1e-9:
                hit = i
                break
        if hit < 0:
            raise TransportError("position not found among atoms")
        idx[k] = hit
    return idx


@dataclass(frozen=True)
class TransportResult:
    """Outcome of an exact transport solve."""

    cost: float
    plan: Coupling
    potentials: tuple | None = None
    runtime_ms: float = 0.0
    n_pivots: int = 0

    def to_record(self) -> dict:
        return {"cost": self.cost, "n_entries": self.plan.n_entries,
                "runtime_ms": self.runtime_ms}


def squared_distance_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def w2_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportResult:
    """Monotone (quantile) coupling on the line; exact optimum for d = 1."""
    if mu.dim != 1 or nu.dim != 1:
        raise TransportError("w2_1d requires one-dimensional measures")
    t0 = time.perf_counter()
    # canonical atom order is ascending in d = 1
    xs = mu.points[:, 0]
    ys = nu.points[:, 0]
    wa = mu.weights
    wb = nu.weights
    rows, cols, mass = [], [], []
    i = j = 0
    ra = float(wa[0])
    rb = float(wb[0])
    cost = 0.0
    while True:
        f = ra if ra < rb else rb
        if f > 0.0:
            rows.append(i)
            cols.append(j)
            mass.append(f)
            d = xs[i] - ys[j]
            cost += f * d * d
        if i == mu.n - 1 and j == nu.n - 1:
            break
        # guard both ends: float drift must never push an index out of range
        if j == nu.n - 1 or (i < mu.n - 1 and ra <= rb):
            rb -= f
            i += 1
            ra = float(wa[i])
        else:
            ra -= f
            j += 1
            rb = float(wb[j])
    plan = Coupling(mu, nu, np.array(rows, dtype=np.intp),
                    np.array(cols, dtype=np.intp), np.array(mass))
    return TransportResult(cost=cost, plan=plan,
                           runtime_ms=(time.perf_counter() - t0) * 1e3)


def w2(mu: DiscreteMeasure, nu: DiscreteMeasure, method: str = "auto",
       backend=None) -> TransportResult:
    """Exact squared W2 distance with an optimal vertex plan.

    ``method``: "auto" uses the monotone sweep in d = 1 and the network
    simplex otherwise; "simplex" / "sweep1d" force one path (tests compare
    the two on the line).
    """
    require_same_dim(mu, nu)
    if method not in ("auto", "simplex", "sweep1d"):
        raise ValueError(f"unknown method {method!r}")
    if method == "sweep1d" or (method == "auto" and mu.dim == 1):
        return w2_1d(mu, nu)
    ker = backend if backend is not None else _kernels.load_active()
    t0 = time.perf_counter()
    cmat = squared_distance_matrix(mu.points, nu.points)
    sol = ker.solve_transport(mu.weights, nu.weights, cmat)
    plan = Coupling(mu, nu, sol["rows"], sol["cols"], sol["mass"])
    return TransportResult(cost=sol["objective"], plan=plan,
                           potentials=(sol["u"], sol["v"]),
                           runtime_ms=(time.perf_counter() - t0) * 1e3,
                           n_pivots=sol["n_pivots"])


def is_optimal(gamma: Coupling, tol: float | None = None) -> bool:
    """Whether a plan attains the optimal quadratic cost between its marginals."""
    cost = gamma.cost()
    if tol is None:
        tol = COST_REL_TOL * (1.0 + cost)
    best = w2(gamma.row_measure, gamma.col_measure).cost
    return cost <= best + tol


def geodesic_point(gamma: Coupling, t: float) -> DiscreteMeasure:
    """Displacement interpolation (1-t) x + t y along an optimal plan."""
    if not 0.0 <= t <= 1.0:
        raise TransportError(f"t={t} outside [0, 1]")
    if not is_optimal(gamma):
        raise TransportError("geodesic_point requires an optimal plan")
    x = _positions(gamma.row_measure)[gamma.rows]
    y = _positions(gamma.col_measure)[gamma.cols]
    return DiscreteMeasure((1.0 - t) * x + t * y, gamma.mass)


def lexi_transport_lp(row_phi: VelocityMeasure, col_phi: VelocityMeasure,
                      objective: str = "min", backend=None,
                      face_tol: float | None = None):
    """Optimize sum Theta_ij <x_i - y_j, v_i - w_j> over couplings of the two
    velocity measures whose position marginal attains the optimal quadratic
    cost.

    Solved lexicographically: stage one minimizes the quadratic position
    cost; stage two optimizes the bilinear objective over the optimal face
    (arcs with reduced cost below ``face_tol`` under the stage-one duals),
    warm starting from the stage-one basis.  Returns ``(value, plan)``.
    """
    require_same_dim(row_phi, col_phi)
    if objective not in ("min", "max"):
        raise ValueError(f"objective must be 'min' or 'max', got {objective!r}")
    ker = backend if backend is not None else _kernels.load_active()

    cmat = squared_distance_matrix(row_phi.x, col_phi.x)
    stage1 = ker.solve_transport(row_phi.weights, col_phi.weights, cmat)

    if face_tol is None:
        face_tol = FACE_REL_TOL * (1.0 + float(np.abs(cmat).max()))
    rc = cmat - stage1["u"][:, None] - stage1["v"][None, :]
    allowed = rc <= face_tol

    dx = row_phi.x[:, None, :] - col_phi.x[None, :, :]
    dv = row_phi.v[:, None, :] - col_phi.v[None, :, :]
    smat = np.einsum("ijk,ijk->ij", dx, dv)
    sign = 1.0 if objective == "min" else -1.0
    stage2 = ker.solve_transport(row_phi.weights, col_phi.weights, sign * smat,
                                 allowed=allowed, basis=stage1["basis"])
    value = sign * stage2["objective"]
    plan = Coupling(row_phi, col_phi, stage2["rows"], stage2["cols"], stage2["mass"])
    return value, plan
