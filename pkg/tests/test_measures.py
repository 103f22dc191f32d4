import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wassdyn.measures import (DiscreteMeasure, MeasureError,
                              dirac, from_atoms, lambda_transform, negate,
                              push_exp, quantile_discretize_1d, second_moment,
                              shift, uniform_interval, unit_disc,
                              velocity_from_atoms, velocity_norm, x_marginal,
                              zero_velocity_lift)

from conftest import rand_velocity


# --- construction -------------------------------------------------------------

def test_weights_must_normalize():
    with pytest.raises(MeasureError):
        DiscreteMeasure([[0.0], [1.0]], [0.5, 0.6])


def test_negative_weights_rejected():
    with pytest.raises(MeasureError):
        DiscreteMeasure([[0.0], [1.0]], [1.5, -0.5])


def test_zero_weight_atoms_dropped():
    mu = DiscreteMeasure([[0.0], [1.0], [2.0]], [0.5, 0.0, 0.5])
    assert mu.n == 2
    assert np.allclose(mu.points.ravel(), [0.0, 2.0])


def test_nonfinite_points_rejected():
    with pytest.raises(MeasureError):
        DiscreteMeasure([[np.nan]], [1.0])
    with pytest.raises(MeasureError):
        DiscreteMeasure([[np.inf], [0.0]], [0.5, 0.5])


def test_coincident_atoms_merge():
    mu = DiscreteMeasure([[1.0], [1.0 + 1e-13], [0.0]], [0.25, 0.25, 0.5])
    assert mu.n == 2
    assert np.allclose(sorted(mu.weights), [0.5, 0.5])


def test_immutable():
    mu = dirac([0.0])
    with pytest.raises(AttributeError):
        mu.points = np.zeros((1, 1))
    with pytest.raises(ValueError):
        mu.points[0, 0] = 1.0


# --- second moment --------------------------------------------------------------

def test_second_moment_dirac_origin():
    assert second_moment(dirac([0.0])) == 0.0


def test_second_moment_symmetric_pair():
    mu = from_atoms([(0.5, [-1.0]), (0.5, [1.0])])
    assert second_moment(mu) == pytest.approx(1.0, abs=1e-15)


def test_second_moment_uniform_discretization():
    # independent midpoint-rule oracle for the n = 100 uniform discretization
    n = 100
    expected = sum(((k - 0.5) / n) ** 2 for k in range(1, n + 1)) / n
    mu = uniform_interval(0.0, 1.0, n)
    assert second_moment(mu) == pytest.approx(expected, abs=1e-15)
    assert abs(second_moment(mu) - 1.0 / 3.0) <= 3e-4


# --- velocity measures ----------------------------------------------------------

def test_velocity_norm_zero():
    phi = velocity_from_atoms([(1.0, [2.0], [0.0])])
    assert velocity_norm(phi) == 0.0


def test_velocity_norm_unit_pair():
    phi = velocity_from_atoms([(0.5, [0.0], [1.0]), (0.5, [0.0], [-1.0])])
    assert velocity_norm(phi) == pytest.approx(1.0)


def test_velocity_norm_pythagorean():
    phi = velocity_from_atoms([(1.0, [0.0, 0.0], [3.0, 4.0])])
    assert velocity_norm(phi) == pytest.approx(5.0)


def test_push_exp_zero_time_is_marginal():
    phi = velocity_from_atoms([(0.4, [0.0], [1.0]), (0.6, [2.0], [-1.0])])
    assert push_exp(phi, 0.0).same_atoms(x_marginal(phi))


def test_push_exp_dirac():
    phi = velocity_from_atoms([(1.0, [0.0], [1.0])])
    out = push_exp(phi, 0.7)
    assert out.same_atoms(dirac([0.7]))


def test_push_exp_splits_multivalued_atom():
    phi = velocity_from_atoms([(0.5, [0.0], [1.0]), (0.5, [0.0], [-1.0])])
    out = push_exp(phi, 1.0)
    assert out.same_atoms(from_atoms([(0.5, [-1.0]), (0.5, [1.0])]))


def test_push_exp_merges_collisions():
    phi = velocity_from_atoms([(0.5, [0.0], [1.0]), (0.5, [2.0], [-1.0])])
    out = push_exp(phi, 1.0)
    assert out.n == 1 and out.weights[0] == pytest.approx(1.0)


def test_x_marginal_aggregates():
    phi = velocity_from_atoms([(0.5, [0.0], [1.0]), (0.5, [0.0], [-1.0])])
    assert x_marginal(phi).same_atoms(dirac([0.0]))


def test_negate_involution_and_norm(rng):
    phi = rand_velocity(rng, n=5, d=2)
    back = negate(negate(phi))
    assert np.array_equal(back.x, phi.x) and np.array_equal(back.v, phi.v)
    assert velocity_norm(negate(phi)) == velocity_norm(phi)


def test_lambda_transform_examples():
    phi = velocity_from_atoms([(1.0, [1.0], [1.0])])
    same = lambda_transform(phi, 0.0)
    assert np.array_equal(same.v, phi.v)
    out = lambda_transform(phi, 1.0)
    assert out.v[0, 0] == 0.0


@settings(max_examples=60, deadline=None)
@given(lam1=st.floats(-3, 3), lam2=st.floats(-3, 3),
       seed=st.integers(0, 2**16))
def test_lambda_transform_composes(lam1, lam2, seed):
    phi = rand_velocity(np.random.default_rng(seed), n=4, d=2)
    a = lambda_transform(lambda_transform(phi, lam2), lam1)
    b = lambda_transform(phi, lam1 + lam2)
    assert np.allclose(a.v, b.v, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(s=st.floats(-1, 1), t=st.floats(-1, 1), seed=st.integers(0, 2**16))
def test_push_exp_free_motion_semigroup(s, t, seed):
    phi = rand_velocity(np.random.default_rng(seed), n=5, d=2)
    one = push_exp(phi, s + t)
    two = push_exp(shift(phi, t), s)
    assert one.same_atoms(two, tol=1e-10, wtol=1e-10)


def test_weight_normalization_preserved(rng):
    phi = rand_velocity(rng, n=6, d=3)
    for out in (push_exp(phi, 0.3), x_marginal(phi)):
        assert abs(out.weights.sum() - 1.0) <= 1e-12
    for out in (negate(phi), lambda_transform(phi, 0.7), shift(phi, 0.2)):
        assert abs(out.weights.sum() - 1.0) <= 1e-12


# --- discretizers ----------------------------------------------------------------

def test_quantile_single_atom():
    mu = quantile_discretize_1d(lambda q: q, 1)
    assert mu.same_atoms(dirac([0.5]))


def test_quantile_two_atoms():
    mu = quantile_discretize_1d(lambda q: q, 2)
    assert mu.same_atoms(from_atoms([(0.5, [0.25]), (0.5, [0.75])]))


def test_quantile_rejects_bad_values():
    with pytest.raises(MeasureError):
        quantile_discretize_1d(lambda q: float("inf"), 3)
    with pytest.raises(MeasureError):
        quantile_discretize_1d(lambda q: q, 0)


def test_unit_disc_moments():
    mu = unit_disc(400)
    # uniform disc: E|x|^2 = 1/2, barycenter 0
    assert second_moment(mu) == pytest.approx(0.5, abs=2e-3)
    assert np.allclose(mu.weights @ mu.points, [0.0, 0.0], atol=5e-3)


def test_zero_velocity_lift_roundtrip():
    mu = uniform_interval(0.0, 1.0, 5)
    phi = zero_velocity_lift(mu)
    assert velocity_norm(phi) == 0.0
    assert x_marginal(phi).same_atoms(mu)


def test_dimension_mismatch_fails_loudly():
    from wassdyn.transport import w2
    with pytest.raises(MeasureError):
        w2(dirac([0.0]), dirac([0.0, 0.0]))


def test_free_motion_w2_bound(rng):
    from wassdyn.transport import w2
    for _ in range(8):
        phi = rand_velocity(rng, d=2)
        for t in (-0.7, 0.2, 1.3):
            moved = push_exp(phi, t)
            dist = math.sqrt(w2(moved, x_marginal(phi)).cost)
            assert dist <= abs(t) * velocity_norm(phi) + 1e-12
