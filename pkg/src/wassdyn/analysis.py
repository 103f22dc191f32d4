"""Verification of evolution properties on sampled curves of measures.

The checks here turn the qualitative guarantees of dissipative evolutions
into computable residuals: the integral evolution variational inequality, the
contraction property between two runs, the step-refinement (Cauchy) and
discrete-vs-limit error envelopes, empirical convergence rates, and the weak
(test-function) formulation.  Closed-form reference flows used by the test
battery live at the bottom.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .euler import EulerTrajectory, euler_run, interpolate
from .fields import MpvfSpec, evaluate, split_median
from .measures import (DiscreteMeasure, MeasureError, second_moment,
                       velocity_norm)
from .pairings import pairing_r_nu
from .tolerances import CHECK_TOL
from .transport import w2, geodesic_point


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class CurveSamples:
    """A curve of measures sampled on a strictly increasing time grid."""

    times: np.ndarray
    measures: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.shape[0] != len(self.measures):
            raise AnalysisError("times and measures must align")
        if times.shape[0] >= 2 and not np.all(np.diff(times) > 0):
            raise AnalysisError("times must be strictly increasing")
        dims = {m.dim for m in self.measures}
        if len(dims) != 1:
            raise AnalysisError("measures must share one dimension")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "measures", tuple(self.measures))

    @classmethod
    def from_trajectory(cls, traj: EulerTrajectory, stride: int = 1) -> "CurveSamples":
        """Sample a trajectory on every ``stride``-th grid point.

        Central-difference checks budget an O(dt^2) error, while a run of
        step tau carries an O(tau) drift: subsampling a fine run (tau of
        order dt^2) keeps both inside the budget.
        """
        times = traj.times[::stride]
        measures = traj.measures[::stride]
        return cls(times, measures)

    @classmethod
    def from_function(cls, fn, times) -> "CurveSamples":
        times = np.asarray(times, dtype=float)
        return cls(times, tuple(fn(t) for t in times))

    def at(self, t: float) -> DiscreteMeasure:
        idx = np.nonzero(np.abs(self.times - t) <= 1e-12)[0]
        if idx.size == 0:
            raise AnalysisError(f"t={t} is not on the sample grid")
        return self.measures[int(idx[0])]


# --- integral evolution variational inequality -------------------------------

def evi_table(curve: CurveSamples, spec: MpvfSpec, nu: DiscreteMeasure,
              lam: float):
    """Rows (s, t, lhs, rhs, excess) of the integral inequality

        e^{-2 lam (t-s)} W2^2(mu_t, nu) - W2^2(mu_s, nu)
            <= -2 int_s^t e^{-2 lam (r-s)} pairing_r(Phi, mu_r) dr

    with Phi the field section at nu, integrals by trapezoid on the grid.
    Returns (rows, residual, budget): the residual is the largest excess and
    the budget is the quadrature allowance for an exact solution.
    """
    times = curve.times
    if times.shape[0] < 3:
        raise AnalysisError("need at least 3 grid points")
    phi = evaluate(spec, nu)
    pair_vals = np.array([pairing_r_nu(phi, m).value for m in curve.measures])
    w2sq = np.array([w2(m, nu).cost for m in curve.measures])

    rows = []
    residual = -math.inf
    n = times.shape[0]
    for i in range(n - 1):
        # cumulative trapezoid of e^{-2 lam (r - s)} p(r) from s = times[i]
        g = np.exp(-2.0 * lam * (times[i:] - times[i])) * pair_vals[i:]
        seg = 0.5 * (g[1:] + g[:-1]) * np.diff(times[i:])
        integral = np.concatenate(([0.0], np.cumsum(seg)))
        for j in range(i + 1, n):
            lhs = math.exp(-2.0 * lam * (times[j] - times[i])) * w2sq[j] - w2sq[i]
            rhs = -2.0 * integral[j - i]
            excess = lhs - rhs
            rows.append((times[i], times[j], lhs, rhs, excess))
            residual = max(residual, excess)

    dt = float(np.max(np.diff(times)))
    span = float(times[-1] - times[0])
    scale = (1.0 + 2.0 * abs(lam)) ** 2 * (1.0 + float(np.max(np.abs(pair_vals))))
    budget = dt * dt * span * scale + CHECK_TOL
    return rows, residual, budget


def evi_residual(curve: CurveSamples, spec: MpvfSpec, nu: DiscreteMeasure,
                 lam: float) -> float:
    """Largest excess of the integral inequality over all grid pairs s < t."""
    _rows, residual, _budget = evi_table(curve, spec, nu, lam)
    return residual


# --- contraction between two runs ---------------------------------------------

def same_step_allowance(L: float, t: float, tau: float, lam: float) -> float:
    """Discretization allowance for two runs with one step size."""
    lam_plus = max(lam, 0.0)
    st = math.sqrt(max(t, 0.0) * tau)
    return 8.0 * L * st * (1.0 + abs(lam) * st) * math.exp(lam_plus * t)


def contraction_table(spec: MpvfSpec, mu0: DiscreteMeasure, mu1: DiscreteMeasure,
                      tau: float, T: float, lam: float, L: float):
    """Rows (t, distance, bound, excess) against
    e^{lam t} W2(mu0, mu1) + allowance(t)."""
    if max(lam, 0.0) * tau > 2.0:
        raise AnalysisError("step too large for the contraction estimate")
    ta = euler_run(spec, mu0, tau, T, L)
    tb = euler_run(spec, mu1, tau, T, L)
    w0 = math.sqrt(w2(mu0, mu1).cost)
    rows = []
    for k, t in enumerate(ta.times):
        dist = math.sqrt(w2(ta.measures[k], tb.measures[k]).cost)
        bound = math.exp(lam * t) * w0 + same_step_allowance(L, t, tau, lam)
        rows.append((t, dist, bound, dist - bound))
    return rows


def contraction_check(spec: MpvfSpec, mu0: DiscreteMeasure, mu1: DiscreteMeasure,
                      tau: float, T: float, lam: float, L: float) -> float:
    """Largest excess over the contraction bound (passes when <= ~0)."""
    rows = contraction_table(spec, mu0, mu1, tau, T, lam, L)
    return max(r[3] for r in rows)


# --- step-refinement (Cauchy) envelope ----------------------------------------

def refinement_constant(theta: float) -> float:
    """Envelope constant for two different step sizes."""
    if theta <= 1.0:
        raise AnalysisError("theta must exceed 1")
    theta_star = theta / (theta - 1.0)
    return math.sqrt(14.0 * theta + 4.0 * theta_star) + 10.0 * theta


def limit_constant(theta: float) -> float:
    """Envelope constant between a run and the limit curve."""
    if theta <= 1.0:
        raise AnalysisError("theta must exceed 1")
    theta_star = theta / (theta - 1.0)
    return math.sqrt(5.0 * theta + 4.0 * theta_star) + 6.0 * theta


def limit_envelope(L: float, tau: float, t: float) -> float:
    """Optimal-constant form of the run-vs-limit error bound (lam <= 0)."""
    return 13.0 * L * math.sqrt(tau * (t + tau))


def cauchy_table(run_a: EulerTrajectory, run_b: EulerTrajectory,
                 theta: float, lam: float):
    """Rows (t, distance, bound, excess) for two runs of one field with
    different steps."""
    if run_a.field.describe() != run_b.field.describe():
        raise AnalysisError("runs drive different fields")
    if abs(run_a.horizon - run_b.horizon) > 1e-12:
        raise AnalysisError("runs have different horizons")
    T = run_a.horizon
    sigma = run_a.tau + run_b.tau
    if lam * math.sqrt(T * sigma) > 1.0:
        raise AnalysisError("lam * sqrt(T (tau + eta)) must stay below 1")
    L = max(run_a.stability_bound, run_b.stability_bound)
    lam_plus = max(lam, 0.0)
    const = refinement_constant(theta)
    w0 = math.sqrt(w2(run_a.measures[0], run_b.measures[0]).cost)
    grid = np.unique(np.concatenate([run_a.times, run_b.times]))
    grid = grid[grid <= T + 1e-12]
    rows = []
    for t in grid:
        dist = math.sqrt(w2(interpolate(run_a, t), interpolate(run_b, t)).cost)
        bound = (math.sqrt(theta) * w0
                 + const * L * math.sqrt(sigma * (t + sigma))) * math.exp(lam_plus * t)
        rows.append((float(t), dist, bound, dist - bound))
    return rows


def cauchy_gap_check(run_a: EulerTrajectory, run_b: EulerTrajectory,
                     theta: float, lam: float) -> float:
    """Largest excess over the refinement envelope (passes when <= 0)."""
    rows = cauchy_table(run_a, run_b, theta, lam)
    return max(r[3] for r in rows)


# --- convergence rate ----------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    """Log-log least-squares fit of errors against step sizes."""

    taus: tuple
    errors: tuple
    slope: float
    intercept: float
    r2: float
    excluded: tuple  # indices left out of the fit (errors at float noise)


def error_rate_study(spec: MpvfSpec, mu0: DiscreteMeasure, reference,
                     taus, T: float, L: float, parallel: bool = True) -> RateFit:
    """Errors e(tau) = W2(run(tau) at T, reference(T)) and their log-log slope.

    Entries whose error sits at float-noise level are excluded from the fit
    (step-exact schemes would otherwise produce log of zero) and reported in
    ``excluded``.
    """
    taus = [float(t) for t in taus]
    if len(set(taus)) < 2:
        raise AnalysisError("need at least 2 distinct step sizes")
    ref = reference(T)

    def one(tau: float) -> float:
        traj = euler_run(spec, mu0, tau, T, L)
        return math.sqrt(w2(interpolate(traj, T), ref).cost)

    if parallel and len(taus) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(taus))) as pool:
            errors = list(pool.map(one, taus))
    else:
        errors = [one(t) for t in taus]

    scale = 1.0 + math.sqrt(second_moment(ref))
    noise = 10.0 * 1e-14 * scale
    keep = [i for i, e in enumerate(errors) if e > noise]
    excluded = tuple(i for i in range(len(errors)) if i not in keep)
    if len(keep) >= 2:
        lx = np.log(np.array([taus[i] for i in keep]))
        ly = np.log(np.array([errors[i] for i in keep]))
        slope, intercept = np.polyfit(lx, ly, 1)
        pred = slope * lx + intercept
        ss_res = float(np.sum((ly - pred) ** 2))
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        slope = intercept = r2 = math.nan
    return RateFit(taus=tuple(taus), errors=tuple(errors), slope=float(slope),
                   intercept=float(intercept), r2=float(r2), excluded=excluded)


# --- weak (test function) residual ---------------------------------------------

TEST_FUNCTIONS = {
    # name: (phi(points) -> (n,), grad(points) -> (n, d), curvature(R))
    "first_coordinate": (lambda x: x[:, 0],
                         lambda x: np.hstack([np.ones((x.shape[0], 1)),
                                              np.zeros((x.shape[0], x.shape[1] - 1))]),
                         lambda R: 0.0),
    "norm_sq": (lambda x: np.einsum("ij,ij->i", x, x),
                lambda x: 2.0 * x,
                lambda R: 2.0),
    "cube_sum": (lambda x: np.sum(x**3, axis=1),
                 lambda x: 3.0 * x**2,
                 lambda R: 6.0 * R),
}


def barycentric_table(curve: CurveSamples, spec: MpvfSpec,
                      test_functions=("first_coordinate", "norm_sq", "cube_sum")):
    """Rows (name, t, lhs, rhs, excess): central difference of t -> int phi
    dmu_t against the field average sum w <grad phi(x), v> at interior grid
    points."""
    times = curve.times
    if times.shape[0] < 3:
        raise AnalysisError("need at least 3 grid points")
    sections = [evaluate(spec, m) for m in curve.measures]
    vmax = max(velocity_norm(p) for p in sections)
    radius = max(float(np.max(np.abs(m.points))) for m in curve.measures)

    rows = []
    curv_scale = 0.0
    for name in test_functions:
        try:
            phi_fn, grad_fn, curv = TEST_FUNCTIONS[name]
        except KeyError:
            raise AnalysisError(f"unknown test function {name!r}") from None
        curv_scale = max(curv_scale, curv(radius))
        moments = np.array([float(np.dot(m.weights, phi_fn(m.points)))
                            for m in curve.measures])
        for k in range(1, times.shape[0] - 1):
            lhs = (moments[k + 1] - moments[k - 1]) / (times[k + 1] - times[k - 1])
            sec = sections[k]
            rhs = float(np.dot(sec.weights,
                               np.einsum("ij,ij->i", grad_fn(sec.x), sec.v)))
            rows.append((name, float(times[k]), lhs, rhs, abs(lhs - rhs)))

    dt = float(np.max(np.diff(times)))
    budget = dt * dt * (1.0 + curv_scale) * (1.0 + vmax**2) + CHECK_TOL
    return rows, budget


def barycentric_residual(curve: CurveSamples, spec: MpvfSpec,
                         test_functions=("first_coordinate", "norm_sq", "cube_sum")) -> float:
    """Largest weak-form mismatch over interior grid times and test functions."""
    rows, _budget = barycentric_table(curve, spec, test_functions)
    return max(r[4] for r in rows)


# --- closed-form reference flows -----------------------------------------------

def analytic_splitting(mu0, t: float, n: int | None = None) -> DiscreteMeasure:
    """Exact median-splitting evolution at time t >= 0.

    ``mu0`` is either a 1-D DiscreteMeasure (atom-wise rule: mass left of the
    median atom moves left, mass right moves right, the median atom splits)
    or an interval (a, b) with atom count ``n``, in which case the exact
    uniform-law solution (two uniform blocks of mass one half) is discretized
    by midpoint quantiles.
    """
    if t < 0:
        raise AnalysisError("t must be nonnegative")
    if isinstance(mu0, DiscreteMeasure):
        if mu0.dim != 1:
            raise AnalysisError("splitting flow is one-dimensional")
        j, eta, left = split_median(mu0)
        xs, ws = [], []
        for k in range(mu0.n):
            xk = mu0.points[k, 0]
            if k < j:
                xs.append(xk - t); ws.append(mu0.weights[k])
            elif k > j:
                xs.append(xk + t); ws.append(mu0.weights[k])
            else:
                if left > 0.0:
                    xs.append(xk - t); ws.append(left)
                if eta > 0.0:
                    xs.append(xk + t); ws.append(eta)
        return DiscreteMeasure(np.array(xs).reshape(-1, 1), ws)
    a, b = float(mu0[0]), float(mu0[1])
    if n is None or n < 2 or n % 2:
        raise AnalysisError("interval mode needs an even atom count n")
    if not b > a:
        raise AnalysisError("need b > a")
    mid = 0.5 * (a + b)
    half = n // 2
    qs = (np.arange(1, half + 1) - 0.5) / half
    left_block = (a - t) + qs * (mid - a)
    right_block = (mid + t) + qs * (b - mid)
    pts = np.concatenate([left_block, right_block]).reshape(-1, 1)
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def analytic_geodesic_flow(target: DiscreteMeasure, mu0: DiscreteMeasure,
                           t: float) -> DiscreteMeasure:
    """Exact flow toward ``target`` in d = 1: the geodesic from target to mu0
    evaluated at parameter e^{-t}."""
    if target.dim != 1 or mu0.dim != 1:
        raise AnalysisError("geodesic flow reference is one-dimensional")
    plan = w2(target, mu0).plan
    return geodesic_point(plan, math.exp(-t))


EXACT_FLOWS = {
    "rotation90": 2,   # d requirement; flow of v = (x2, -x1)
    "negation": None,  # flow of v = -x
    "minus_sign": None,  # unit-speed decay toward 0, then rest
}


def analytic_lift(map_id: str, mu0: DiscreteMeasure, t: float) -> DiscreteMeasure:
    """Per-particle exact flow of a named map applied to every atom."""
    if map_id not in EXACT_FLOWS:
        raise AnalysisError(f"no exact flow registered for {map_id!r}")
    need = EXACT_FLOWS[map_id]
    if need is not None and mu0.dim != need:
        raise MeasureError(f"{map_id} flow needs dimension {need}")
    x = mu0.points
    if map_id == "rotation90":
        c, s = math.cos(t), math.sin(t)
        moved = np.column_stack([c * x[:, 0] + s * x[:, 1],
                                 -s * x[:, 0] + c * x[:, 1]])
    elif map_id == "negation":
        moved = math.exp(-t) * x
    else:  # minus_sign: radial distance shrinks at unit speed and stops at 0
        norm = np.abs(x)
        moved = np.sign(x) * np.maximum(norm - t, 0.0)
    return DiscreteMeasure(moved, mu0.weights)
