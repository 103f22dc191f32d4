"""Explicit stepping scheme for measure-driven evolutions.

One step pushes the current measure along a field selection for time tau:
M^{n+1} = (x + tau v)_# Phi^n with Phi^n a selection at M^n whose L2 speed
stays below the stability bound L.  The module also provides the two
interpolants of the discrete trajectory, the a-priori horizon constants, and
the per-step dissipation inequality check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import MpvfSpec, selections
from .measures import (DiscreteMeasure, VelocityMeasure, push_exp,
                       velocity_norm)
from .pairings import pairing_r_nu
from .tolerances import ATOM_BUDGET
from .transport import w2


class StabilityViolation(RuntimeError):
    """No admissible selection satisfied the speed bound at some step."""

    def __init__(self, step: int, norms):
        self.step = step
        self.norms = list(norms)
        super().__init__(
            f"step {step}: selection speeds {self.norms} all exceed the bound")


class AtomBudgetExceeded(RuntimeError):
    """Support grew past the configured atom budget with resampling off."""


@dataclass(frozen=True)
class EulerTrajectory:
    """Discrete solution (M^n, Phi^n), n = 0..N, with N = ceil(T / tau)."""

    tau: float
    horizon: float
    stability_bound: float
    measures: tuple
    velocities: tuple
    field: MpvfSpec
    resampled: bool = False

    @property
    def n_steps(self) -> int:
        return len(self.measures) - 1

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(len(self.measures))

    @property
    def end_time(self) -> float:
        return self.tau * self.n_steps


def _thin(mu: DiscreteMeasure, budget: int) -> DiscreteMeasure:
    """Deterministic stratified thinning preserving total weight."""
    cum = np.cumsum(mu.weights)
    targets = (np.arange(budget) + 0.5) / budget
    idx = np.searchsorted(cum, targets)
    idx = np.minimum(idx, mu.n - 1)
    return DiscreteMeasure(mu.points[idx], np.full(budget, 1.0 / budget))


def euler_run(spec: MpvfSpec, mu0: DiscreteMeasure, tau: float, T: float,
              L: float, atom_budget: int = ATOM_BUDGET,
              resample: bool = False) -> EulerTrajectory:
    """Run the explicit scheme over [0, T] with step tau and speed bound L.

    Raises StabilityViolation when no selection at some step satisfies
    |Phi|_2 <= L, and AtomBudgetExceeded when the support outgrows
    ``atom_budget`` with ``resample`` off (thinning is opt-in because it
    perturbs the otherwise exact scheme).
    """
    if tau <= 0 or T <= 0 or L <= 0:
        raise ValueError("tau, T and L must be positive")
    n_steps = math.ceil(T / tau - 1e-12)
    measures = [mu0]
    velocities = []
    resampled = False
    current = mu0
    for n in range(n_steps):
        chosen = None
        tried = []
        for phi in selections(spec, current):
            speed = velocity_norm(phi)
            tried.append(speed)
            if speed <= L:
                chosen = phi
                break
        if chosen is None:
            raise StabilityViolation(n, tried)
        current = push_exp(chosen, tau)
        if current.n > atom_budget:
            if not resample:
                raise AtomBudgetExceeded(
                    f"step {n + 1}: {current.n} atoms exceed the budget "
                    f"{atom_budget}; rerun with resample=True to thin")
            current = _thin(current, atom_budget)
            resampled = True
        velocities.append(chosen)
        measures.append(current)
    return EulerTrajectory(tau=tau, horizon=T, stability_bound=L,
                           measures=tuple(measures), velocities=tuple(velocities),
                           field=spec, resampled=resampled)


def interpolate(traj: EulerTrajectory, t: float, mode: str = "affine") -> DiscreteMeasure:
    """Trajectory value at an off-grid time.

    ``affine`` continues the last selection for the fractional step;
    ``piecewise`` returns the measure at the step floor.  t may range over
    [0, N tau], which covers [0, T] plus the final partial step.
    """
    if mode not in ("affine", "piecewise"):
        raise ValueError(f"unknown interpolation mode {mode!r}")
    end = traj.end_time
    if t < -1e-12 or t > end + 1e-12:
        raise ValueError(f"t={t} outside [0, {end}]")
    t = min(max(t, 0.0), end)
    n = min(int(math.floor(t / traj.tau + 1e-12)), traj.n_steps)
    if mode == "piecewise":
        return traj.measures[n]
    if n == traj.n_steps:
        return traj.measures[n]
    frac = t - n * traj.tau
    if frac <= 0.0:
        return traj.measures[n]
    return push_exp(traj.velocities[n], frac)


@dataclass(frozen=True)
class GlobalBounds:
    """Horizon constants guaranteeing solvability of the scheme."""

    R: float
    L: float
    tau_max: float


def global_bounds(mu0: DiscreteMeasure, psi0: VelocityMeasure, T: float,
                  lam: float, M_of_R, tau_bar_of_R=None) -> GlobalBounds:
    """Radius, speed bound and admissible step for a run of horizon T.

    R bounds the second-moment radius reachable from mu0, L = M(R) bounds the
    selection speeds on that ball, and the step must stay below
    min(1/L^2, tau_bar(R), T).
    """
    from .measures import second_moment

    lam_plus = max(lam, 0.0)
    m0 = math.sqrt(second_moment(mu0))
    R = m0 + (velocity_norm(psi0) + 1.0) * math.sqrt(2.0 * T) * math.exp((1.0 + 2.0 * lam_plus) * T)
    L = float(M_of_R(R))
    tau_max = min(1.0 / L**2 if L > 0 else math.inf, T)
    if tau_bar_of_R is not None:
        tau_max = min(tau_max, float(tau_bar_of_R(R)))
    return GlobalBounds(R=R, L=L, tau_max=tau_max)


def ievi_rows(traj: EulerTrajectory, nu: DiscreteMeasure):
    """Per-step rows (n, lhs, rhs, excess) of the discrete dissipation
    inequality 0.5 W2^2(M^{n+1}, nu) - 0.5 W2^2(M^n, nu)
    <= tau * pairing_r(Phi^n, nu) + 0.5 tau^2 L^2."""
    tau = traj.tau
    lsq = traj.stability_bound**2
    half_sq = [0.5 * w2(m, nu).cost for m in traj.measures]
    rows = []
    for n, phi in enumerate(traj.velocities):
        lhs = half_sq[n + 1] - half_sq[n]
        rhs = tau * pairing_r_nu(phi, nu).value + 0.5 * tau * tau * lsq
        rows.append((n, lhs, rhs, lhs - rhs))
    return rows, max(2.0 * h for h in half_sq)


def ievi_check(traj: EulerTrajectory, nu: DiscreteMeasure) -> float:
    """Max violation of the per-step dissipation inequality (<= ~0 passes)."""
    rows, _scale = ievi_rows(traj, nu)
    return max(r[3] for r in rows)
