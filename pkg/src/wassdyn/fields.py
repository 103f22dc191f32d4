"""Vector-field families on measures and numerical dissipativity certificates.

A field spec describes how to attach a velocity distribution to every
discrete measure.  All built-in kinds are single valued: ``evaluate`` returns
one canonical velocity measure whose position marginal is the input measure,
atom by atom.  Certificates sample seeded random measure pairs and test the
defining pairing inequalities up to a fixed relative slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import (DiscreteMeasure, MeasureError, VelocityMeasure,
                       velocity_norm)
from .pairings import pairing_r, pairing_r_nu
from .tolerances import CERT_TOL
from .transport import w2


class FieldError(ValueError):
    """Invalid field specification or evaluation request."""


# ---------------------------------------------------------------------------
# named building blocks (CLI configs refer to these; callables are also
# accepted through the Python API)

def _norm_sq(x: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, x)[:, None]


POTENTIAL_GRADIENTS: dict[str, Callable] = {
    # gradient of 0.5 |x|^2
    "quadratic": lambda x: x,
    # gradient of 0.25 |x|^4
    "quartic": lambda x: _norm_sq(x) * x,
}

INTERACTION_GRADIENTS: dict[str, Callable] = {
    # gradient of the even kernel 0.5 |z|^2
    "quadratic": lambda z: z,
    # gradient of the even kernel 0.25 |z|^4
    "attractive_quartic": lambda z: _norm_sq(z) * z,
}


def _rotate90(x: np.ndarray) -> np.ndarray:
    return np.column_stack([x[:, 1], -x[:, 0]])


PARTICLE_MAPS: dict[str, tuple[Callable, int | None]] = {
    # (vectorized map, required dimension or None)
    "negation": (lambda x: -x, None),
    "identity": (lambda x: x.copy(), None),
    "double": (lambda x: 2.0 * x, None),
    "rotation90": (_rotate90, 2),
    "minus_sign": (lambda x: -np.sign(x), None),
}

PAIRWISE_MAPS: dict[str, tuple[Callable, int | None]] = {
    "negation": (lambda z: -z, None),
    "rotation90": (_rotate90, 2),
    "minus_sign": (lambda z: -np.sign(z), None),
}

KINDS = ("potential", "interaction", "constant", "rotation",
         "splitting_particle", "toward_measure", "pairwise_map",
         "per_particle_map", "composite_sum")


@dataclass(frozen=True)
class MpvfSpec:
    """Declarative description of a measure vector field."""

    kind: str
    params: dict = field(default_factory=dict)
    selection: str = "canonical"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FieldError(f"unknown field kind {self.kind!r}")
        if self.selection != "canonical":
            raise FieldError("built-in fields only support the canonical selection")
        _VALIDATORS[self.kind](self.params)

    def describe(self) -> dict:
        """JSON-friendly description (callables by their repr)."""
        out = {"kind": self.kind, "selection": self.selection}
        for key, val in self.params.items():
            if isinstance(val, DiscreteMeasure):
                out[key] = {"points": val.points.tolist(), "weights": val.weights.tolist()}
            elif isinstance(val, MpvfSpec):
                out[key] = val.describe()
            elif isinstance(val, tuple):
                out[key] = [v.describe() if isinstance(v, MpvfSpec) else v for v in val]
            else:
                out[key] = val if isinstance(val, (int, float, str)) else repr(val)
        return out


def _resolve(registry: dict, value, what: str, dim: int | None = None) -> Callable:
    if callable(value):
        return value
    try:
        entry = registry[value]
    except KeyError:
        raise FieldError(f"unknown {what} {value!r}; known: {sorted(registry)}") from None
    fn, need_dim = entry if isinstance(entry, tuple) else (entry, None)
    if dim is not None and need_dim is not None and dim != need_dim:
        raise FieldError(f"{what} {value!r} needs dimension {need_dim}, got {dim}")
    return fn


def _check_named(registry: dict, value, what: str):
    if not callable(value) and value not in registry:
        raise FieldError(f"unknown {what} {value!r}; known: {sorted(registry)}")


def _probe_odd(grad: Callable, dim: int, what: str):
    """Interaction kernels must be even, i.e. their gradient odd."""
    probe = np.array([[0.37 + 0.11 * k for k in range(dim)],
                      [-0.52 + 0.23 * k for k in range(dim)]])
    left = np.asarray(grad(probe))
    right = np.asarray(grad(-probe))
    if not np.allclose(left, -right, atol=1e-10):
        raise FieldError(f"{what} gradient is not odd (kernel not even)")


_VALIDATORS = {
    "potential": lambda p: _check_named(POTENTIAL_GRADIENTS, p.get("gradient"), "potential gradient"),
    "interaction": lambda p: _check_named(INTERACTION_GRADIENTS, p.get("gradient"), "interaction gradient"),
    "constant": lambda p: _require_measure(p.get("theta"), "theta"),
    "rotation": lambda p: None,
    "splitting_particle": lambda p: None,
    "toward_measure": lambda p: (_require_measure(p.get("target"), "target"),
                                 _require_sign(p.get("sign", 1.0))),
    "pairwise_map": lambda p: _check_named(PAIRWISE_MAPS, p.get("map"), "pairwise map"),
    "per_particle_map": lambda p: _check_named(PARTICLE_MAPS, p.get("map"), "particle map"),
    "composite_sum": lambda p: _require_children(p.get("children")),
}


def _require_measure(value, name: str):
    if not isinstance(value, DiscreteMeasure):
        raise FieldError(f"{name} must be a DiscreteMeasure")


def _require_sign(value):
    if value not in (1, -1, 1.0, -1.0):
        raise FieldError("sign must be +1 or -1")


def _require_children(children):
    if not children or not all(isinstance(c, MpvfSpec) for c in children):
        raise FieldError("composite_sum needs a nonempty tuple of child specs")
    dims = {c.params["theta"].dim for c in children if c.kind == "constant"}
    if len(dims) > 1:
        raise FieldError("composite children disagree on dimension")


# constructor helpers ---------------------------------------------------------

def potential(gradient="quadratic") -> MpvfSpec:
    return MpvfSpec("potential", {"gradient": gradient})


def interaction(gradient="quadratic") -> MpvfSpec:
    return MpvfSpec("interaction", {"gradient": gradient})


def constant(theta: DiscreteMeasure) -> MpvfSpec:
    return MpvfSpec("constant", {"theta": theta})


def rotation() -> MpvfSpec:
    return MpvfSpec("rotation", {})


def splitting_particle() -> MpvfSpec:
    return MpvfSpec("splitting_particle", {})


def toward_measure(target: DiscreteMeasure, sign: float = 1.0) -> MpvfSpec:
    return MpvfSpec("toward_measure", {"target": target, "sign": float(sign)})


def pairwise_map(map="negation") -> MpvfSpec:
    return MpvfSpec("pairwise_map", {"map": map})


def per_particle_map(map="negation") -> MpvfSpec:
    return MpvfSpec("per_particle_map", {"map": map})


def composite_sum(children) -> MpvfSpec:
    return MpvfSpec("composite_sum", {"children": tuple(children)})


# evaluation ------------------------------------------------------------------

def split_median(nu: DiscreteMeasure):
    """Median atom of a 1-D measure with the splitting coefficients.

    Returns (index of the median atom B, mass going right from B, mass going
    left from B).  B is the largest point whose closed left tail does not
    exceed one half; ties at exactly one half (within 1e-12) go to the next
    atom up.
    """
    if nu.dim != 1:
        raise FieldError("splitting_particle is defined for d = 1 only")
    cum = np.cumsum(nu.weights)
    above = np.nonzero(cum > 0.5 + 1e-12)[0]
    j = int(above[0])
    eta = float(cum[j] - 0.5)
    left = float(0.5 - (cum[j - 1] if j > 0 else 0.0))
    return j, max(eta, 0.0), max(left, 0.0)


def _eval_splitting(mu: DiscreteMeasure) -> VelocityMeasure:
    j, eta, left = split_median(mu)
    xs, vs, ws = [], [], []
    pts = mu.points
    for k in range(mu.n):
        if k < j:
            xs.append(pts[k]); vs.append([-1.0]); ws.append(mu.weights[k])
        elif k > j:
            xs.append(pts[k]); vs.append([1.0]); ws.append(mu.weights[k])
        else:
            if eta > 0.0:
                xs.append(pts[k]); vs.append([1.0]); ws.append(eta)
            if left > 0.0:
                xs.append(pts[k]); vs.append([-1.0]); ws.append(left)
    return VelocityMeasure(np.vstack(xs), np.asarray(vs, dtype=float), ws)


def barycentric_velocities(mu: DiscreteMeasure, target: DiscreteMeasure) -> np.ndarray:
    """Conditional mean of an optimal plan toward ``target``: b(x_i)."""
    plan = w2(mu, target).plan
    acc = np.zeros_like(mu.points)
    np.add.at(acc, plan.rows, plan.mass[:, None] * target.points[plan.cols])
    return acc / mu.weights[:, None]


def _map_like_velocities(spec: MpvfSpec, mu: DiscreteMeasure) -> np.ndarray:
    kind = spec.kind
    x = mu.points
    if kind == "potential":
        grad = _resolve(POTENTIAL_GRADIENTS, spec.params["gradient"], "potential gradient")
        return -np.asarray(grad(x), dtype=float)
    if kind == "interaction":
        grad = _resolve(INTERACTION_GRADIENTS, spec.params["gradient"], "interaction gradient")
        if callable(spec.params["gradient"]):
            _probe_odd(grad, mu.dim, "interaction")
        diff = (x[:, None, :] - x[None, :, :]).reshape(-1, mu.dim)
        vals = np.asarray(grad(diff), dtype=float).reshape(mu.n, mu.n, mu.dim)
        return -np.einsum("j,ijk->ik", mu.weights, vals)
    if kind == "rotation":
        if mu.dim != 2:
            raise FieldError("rotation field needs d = 2")
        return _rotate90(x)
    if kind == "toward_measure":
        target = spec.params["target"]
        if target.dim != mu.dim:
            raise MeasureError(f"dimension mismatch: {target.dim} vs {mu.dim}")
        sign = float(spec.params.get("sign", 1.0))
        return sign * (barycentric_velocities(mu, target) - x)
    if kind == "pairwise_map":
        fn = _resolve(PAIRWISE_MAPS, spec.params["map"], "pairwise map", mu.dim)
        diff = (x[:, None, :] - x[None, :, :]).reshape(-1, mu.dim)
        vals = np.asarray(fn(diff), dtype=float).reshape(mu.n, mu.n, mu.dim)
        return np.einsum("j,ijk->ik", mu.weights, vals)
    if kind == "per_particle_map":
        fn = _resolve(PARTICLE_MAPS, spec.params["map"], "particle map", mu.dim)
        return np.asarray(fn(x), dtype=float)
    raise FieldError(f"{kind} has no single-map representation")


def evaluate(spec: MpvfSpec, mu: DiscreteMeasure) -> VelocityMeasure:
    """Canonical velocity measure of the field at ``mu``.

    The position marginal of the result reproduces ``mu`` atom by atom.
    """
    kind = spec.kind
    if kind == "constant":
        theta = spec.params["theta"]
        if theta.dim != mu.dim:
            raise MeasureError(f"dimension mismatch: {theta.dim} vs {mu.dim}")
        xs = np.repeat(mu.points, theta.n, axis=0)
        vs = np.tile(theta.points, (mu.n, 1))
        ws = (mu.weights[:, None] * theta.weights[None, :]).reshape(-1)
        return VelocityMeasure(xs, vs, ws)
    if kind == "splitting_particle":
        return _eval_splitting(mu)
    if kind == "composite_sum":
        total = None
        for child in spec.params["children"]:
            vel = _single_velocity_block(child, mu)
            total = vel if total is None else total + vel
        return VelocityMeasure(mu.points, total, mu.weights)
    return VelocityMeasure(mu.points, _map_like_velocities(spec, mu), mu.weights)


def _single_velocity_block(spec: MpvfSpec, mu: DiscreteMeasure) -> np.ndarray:
    """Velocity rows aligned with mu's atoms; children must be map-like."""
    if spec.kind in ("constant", "splitting_particle", "composite_sum"):
        phi = evaluate(spec, mu)
        if phi.n != mu.n or not np.array_equal(phi.x, mu.points):
            raise FieldError(
                f"composite child {spec.kind!r} is not single valued at this measure")
        return phi.v.copy()
    return _map_like_velocities(spec, mu)


def selections(spec: MpvfSpec, mu: DiscreteMeasure):
    """Admissible velocity measures at ``mu`` in preference order.

    Built-in fields are single valued, so this yields one element; the
    stepping scheme picks the first selection satisfying its speed bound.
    """
    yield evaluate(spec, mu)


def field_norm(spec: MpvfSpec, mu: DiscreteMeasure) -> float:
    """Minimal L2 speed over the section; built-ins are single valued."""
    return velocity_norm(evaluate(spec, mu))


# certificates ---------------------------------------------------------------

@dataclass(frozen=True)
class MeasureSampler:
    """Seeded generator of random measure pairs on [-1, 1]^d.

    Atom counts are drawn from ``atom_range``; atoms get equal weights.  The
    pair for a given index is derived from (seed, index) only, so runs are
    reproducible and parallelizable.
    """

    dim: int = 1
    seed: int = 0
    atom_range: tuple[int, int] = (2, 8)

    def pair(self, index: int):
        rng = np.random.default_rng([self.seed, index])
        lo, hi = self.atom_range
        out = []
        for _ in range(2):
            n = int(rng.integers(lo, hi + 1))
            pts = rng.uniform(-1.0, 1.0, size=(n, self.dim))
            out.append(DiscreteMeasure(pts, np.full(n, 1.0 / n)))
        return out[0], out[1]


def _serialize_measure(mu: DiscreteMeasure) -> dict:
    return {"points": mu.points.tolist(), "weights": mu.weights.tolist()}


@dataclass(frozen=True)
class DissipativityReport:
    """Outcome of a sampled dissipativity test."""

    lambda_tested: float
    n_pairs: int
    max_residual: float
    worst_pair: dict
    passed: bool
    condition: str  # "strong" (coupled) or "weak" (cross pairings)

    def to_record(self) -> dict:
        return {"lambda": self.lambda_tested, "n_pairs": self.n_pairs,
                "max_residual": self.max_residual, "passed": self.passed,
                "condition": self.condition, "worst_pair": self.worst_pair}


def _certificate(spec: MpvfSpec, sampler: MeasureSampler, lam: float,
                 n_pairs: int, residual_fn, condition: str) -> DissipativityReport:
    if n_pairs < 1:
        raise FieldError("n_pairs must be >= 1")
    max_residual = -np.inf
    worst = None
    passed = True
    for i in range(n_pairs):
        mu0, mu1 = sampler.pair(i)
        w2sq = w2(mu0, mu1).cost
        residual = residual_fn(mu0, mu1) - lam * w2sq
        if residual > CERT_TOL * (1.0 + w2sq):
            passed = False
        if residual > max_residual:
            max_residual = residual
            worst = {"mu0": _serialize_measure(mu0), "mu1": _serialize_measure(mu1)}
    return DissipativityReport(lambda_tested=lam, n_pairs=n_pairs,
                               max_residual=float(max_residual),
                               worst_pair=worst, passed=passed,
                               condition=condition)


def dissipativity_certificate(spec: MpvfSpec, sampler: MeasureSampler,
                              lam: float, n_pairs: int) -> DissipativityReport:
    """Sampled test of the coupled inequality
    pairing_r(F[mu0], F[mu1]) <= lam * W2^2(mu0, mu1)."""

    def residual(mu0, mu1):
        return pairing_r(evaluate(spec, mu0), evaluate(spec, mu1)).value

    return _certificate(spec, sampler, lam, n_pairs, residual, "strong")


def weak_dissipativity_certificate(spec: MpvfSpec, sampler: MeasureSampler,
                                   lam: float, n_pairs: int) -> DissipativityReport:
    """Sampled test of the cross inequality
    pairing_r(F[mu0], mu1) + pairing_r(F[mu1], mu0) <= lam * W2^2(mu0, mu1)."""

    def residual(mu0, mu1):
        return (pairing_r_nu(evaluate(spec, mu0), mu1).value
                + pairing_r_nu(evaluate(spec, mu1), mu0).value)

    return _certificate(spec, sampler, lam, n_pairs, residual, "weak")
