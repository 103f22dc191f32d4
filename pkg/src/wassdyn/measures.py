"""Finitely supported measures on R^d and on position-velocity space R^d x R^d.

Measures are immutable after construction: atoms are stored in a canonical
lexicographic order, coincident atoms (within ATOM_MERGE_TOL per coordinate)
are merged, and zero-weight atoms are dropped.  Every operation returns a new
measure, so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .tolerances import ATOM_MERGE_TOL, WEIGHT_SUM_TOL


class MeasureError(ValueError):
    """Invalid measure construction or incompatible operands."""


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise MeasureError(f"points must be a nonempty (n, d) array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise MeasureError("points contain non-finite entries")
    return pts


def _check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != n:
        raise MeasureError(f"{n} atoms but {w.shape[0]} weights")
    if not np.all(np.isfinite(w)):
        raise MeasureError("weights contain non-finite entries")
    if np.any(w < 0):
        raise MeasureError("weights must be nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise MeasureError(f"weights sum to {total!r}, expected 1 within {WEIGHT_SUM_TOL}")
    return w


def _canonicalize(coords: np.ndarray, weights: np.ndarray, merge_tol: float = ATOM_MERGE_TOL):
    """Sort atoms lexicographically and merge coordinate-wise near-duplicates."""
    order = np.lexsort(coords.T[::-1])
    coords = coords[order]
    weights = weights[order]
    if coords.shape[0] > 1:
        dup = np.all(np.abs(np.diff(coords, axis=0)) <= merge_tol, axis=1)
        if dup.any():
            # group ids: a new group starts wherever the previous row differs
            group = np.concatenate(([0], np.cumsum(~dup)))
            n_groups = group[-1] + 1
            merged_w = np.bincount(group, weights=weights, minlength=n_groups)
            first = np.searchsorted(group, np.arange(n_groups))
            coords = coords[first]
            weights = merged_w
    coords = np.ascontiguousarray(coords)
    weights = np.ascontiguousarray(weights)
    coords.setflags(write=False)
    weights.setflags(write=False)
    return coords, weights


class DiscreteMeasure:
    """Probability measure with finitely many atoms in R^d."""

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        pts = _as_points(points)
        w = _check_weights(weights, pts.shape[0])
        keep = w > 0.0
        if not keep.any():
            raise MeasureError("all atoms have zero weight")
        pts, w = pts[keep], w[keep]
        pts, w = _canonicalize(pts, w)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteMeasure is immutable")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self):
        return f"DiscreteMeasure(n={self.n}, d={self.dim})"

    def same_atoms(self, other: "DiscreteMeasure", tol: float = 0.0, wtol: float = 1e-12) -> bool:
        """Atom-by-atom equality in canonical order."""
        if self.n != other.n or self.dim != other.dim:
            return False
        return bool(
            np.all(np.abs(self.points - other.points) <= tol)
            and np.all(np.abs(self.weights - other.weights) <= wtol)
        )


class VelocityMeasure:
    """Probability measure on position-velocity pairs (x, v) in R^d x R^d."""

    __slots__ = ("x", "v", "weights")

    def __init__(self, x, v, weights):
        xs = _as_points(x)
        vs = _as_points(v)
        if xs.shape != vs.shape:
            raise MeasureError(f"position block {xs.shape} and velocity block {vs.shape} differ")
        w = _check_weights(weights, xs.shape[0])
        keep = w > 0.0
        if not keep.any():
            raise MeasureError("all atoms have zero weight")
        xs, vs, w = xs[keep], vs[keep], w[keep]
        pairs = np.hstack([xs, vs])
        pairs, w = _canonicalize(pairs, w)
        d = xs.shape[1]
        x_final = np.ascontiguousarray(pairs[:, :d])
        v_final = np.ascontiguousarray(pairs[:, d:])
        x_final.setflags(write=False)
        v_final.setflags(write=False)
        object.__setattr__(self, "x", x_final)
        object.__setattr__(self, "v", v_final)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("VelocityMeasure is immutable")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def __repr__(self):
        return f"VelocityMeasure(n={self.n}, d={self.dim})"


def dirac(point) -> DiscreteMeasure:
    """Unit mass at a single point."""
    pts = np.asarray(point, dtype=float).reshape(1, -1)
    return DiscreteMeasure(pts, [1.0])


def from_atoms(pairs) -> DiscreteMeasure:
    """Build a measure from (weight, point) pairs."""
    ws = [p[0] for p in pairs]
    pts = [np.atleast_1d(np.asarray(p[1], dtype=float)) for p in pairs]
    return DiscreteMeasure(np.vstack(pts), ws)


def velocity_from_atoms(triples) -> VelocityMeasure:
    """Build a velocity measure from (weight, x, v) triples."""
    ws = [t[0] for t in triples]
    xs = np.vstack([np.atleast_1d(np.asarray(t[1], dtype=float)) for t in triples])
    vs = np.vstack([np.atleast_1d(np.asarray(t[2], dtype=float)) for t in triples])
    return VelocityMeasure(xs, vs, ws)


def require_same_dim(a, b) -> int:
    if a.dim != b.dim:
        raise MeasureError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return a.dim


def second_moment(mu: DiscreteMeasure) -> float:
    """Weighted squared norm of the atoms: sum_i w_i |x_i|^2."""
    return float(np.dot(mu.weights, np.einsum("ij,ij->i", mu.points, mu.points)))


def velocity_norm(phi: VelocityMeasure) -> float:
    """Root mean squared speed (sum_i w_i |v_i|^2)^(1/2)."""
    return math.sqrt(float(np.dot(phi.weights, np.einsum("ij,ij->i", phi.v, phi.v))))


def push_exp(phi: VelocityMeasure, t: float) -> DiscreteMeasure:
    """Free motion for time t: atom (x, v) goes to x + t v; images are merged."""
    return DiscreteMeasure(phi.x + float(t) * phi.v, phi.weights)


def shift(phi: VelocityMeasure, t: float) -> VelocityMeasure:
    """Move positions along their own velocities, keeping velocities."""
    return VelocityMeasure(phi.x + float(t) * phi.v, phi.v, phi.weights)


def x_marginal(phi: VelocityMeasure) -> DiscreteMeasure:
    """Position marginal, aggregating the weight of atoms that share x."""
    return DiscreteMeasure(phi.x, phi.weights)


def negate(phi: VelocityMeasure) -> VelocityMeasure:
    """Flip every velocity."""
    return VelocityMeasure(phi.x, -phi.v, phi.weights)


def lambda_transform(phi: VelocityMeasure, lam: float) -> VelocityMeasure:
    """Shear (x, v) -> (x, v - lam * x)."""
    return VelocityMeasure(phi.x, phi.v - float(lam) * phi.x, phi.weights)


def zero_velocity_lift(mu: DiscreteMeasure) -> VelocityMeasure:
    """Attach zero velocity to every atom."""
    return VelocityMeasure(mu.points, np.zeros_like(mu.points), mu.weights)


def velocity_from_map(mu: DiscreteMeasure, vel: np.ndarray) -> VelocityMeasure:
    """Velocity measure concentrated on a map: one velocity row per atom of mu."""
    vel = np.asarray(vel, dtype=float)
    if vel.shape != mu.points.shape:
        raise MeasureError(f"velocity block {vel.shape} does not match atoms {mu.points.shape}")
    return VelocityMeasure(mu.points, vel, mu.weights)


def quantile_discretize_1d(cdf_inverse: Callable[[float], float], n: int) -> DiscreteMeasure:
    """Midpoint-quantile discretization: atoms F^{-1}((k-1/2)/n), weight 1/n each."""
    if n < 1:
        raise MeasureError("n must be >= 1")
    qs = (np.arange(1, n + 1) - 0.5) / n
    pts = np.array([float(cdf_inverse(q)) for q in qs])
    if not np.all(np.isfinite(pts)):
        raise MeasureError("quantile function produced non-finite values")
    return DiscreteMeasure(pts.reshape(-1, 1), np.full(n, 1.0 / n))


def uniform_interval(a: float, b: float, n: int) -> DiscreteMeasure:
    """Midpoint-quantile discretization of the uniform law on [a, b]."""
    if not b > a:
        raise MeasureError("need b > a")
    return quantile_discretize_1d(lambda q: a + q * (b - a), n)


def unit_disc(n: int) -> DiscreteMeasure:
    """Deterministic low-discrepancy discretization of the uniform law on the
    unit disc (sunflower lattice), used by the planar rotation scenarios."""
    if n < 1:
        raise MeasureError("n must be >= 1")
    k = np.arange(1, n + 1)
    r = np.sqrt((k - 0.5) / n)
    golden = math.pi * (3.0 - math.sqrt(5.0))
    theta = k * golden
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))
