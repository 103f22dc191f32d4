import math

import numpy as np
import pytest

from wassdyn import bruteforce
from wassdyn._kernels import load_active, load_pure
from wassdyn.measures import (dirac, from_atoms, uniform_interval,
                              velocity_from_atoms, zero_velocity_lift)
from wassdyn.transport import (Coupling, TransportError, geodesic_point,
                               is_optimal, lexi_transport_lp,
                               squared_distance_matrix, w2, w2_1d)

from conftest import rand_measure, rand_velocity


# --- w2 -------------------------------------------------------------------------

def test_w2_dirac_pair():
    res = w2(dirac([0.0, 1.0]), dirac([3.0, 5.0]))
    assert res.cost == pytest.approx(9.0 + 16.0, rel=1e-12)


def test_w2_forced_coupling():
    mu = from_atoms([(0.5, [0.0]), (0.5, [1.0])])
    nu = dirac([0.5])
    assert w2(mu, nu).cost == pytest.approx(0.25, rel=1e-12)


def test_w2_dirac_to_uniform_discretization():
    nu = uniform_interval(0.0, 1.0, 100)
    res = w2(dirac([0.0]), nu)
    assert abs(res.cost - 1.0 / 3.0) <= 1e-4


def test_w2_plan_marginals_and_cost_consistency(rng):
    for _ in range(10):
        mu = rand_measure(rng, d=2)
        nu = rand_measure(rng, d=2)
        res = w2(mu, nu)
        assert res.plan.cost() == pytest.approx(res.cost, rel=1e-9, abs=1e-12)
        # vertex sparsity: at most m + n - 1 entries
        assert res.plan.n_entries <= mu.n + nu.n - 1


def test_w2_symmetry(rng):
    for _ in range(8):
        mu = rand_measure(rng, d=2)
        nu = rand_measure(rng, d=2)
        a = w2(mu, nu).cost
        b = w2(nu, mu).cost
        assert abs(a - b) <= 1e-9 * (1.0 + a)


def test_w2_triangle_inequality(rng):
    for _ in range(8):
        mu, nu, rho = (rand_measure(rng, d=2) for _ in range(3))
        dmn = math.sqrt(w2(mu, nu).cost)
        dmr = math.sqrt(w2(mu, rho).cost)
        drn = math.sqrt(w2(rho, nu).cost)
        assert dmn <= dmr + drn + 1e-7


def test_w2_against_bruteforce(rng):
    for _ in range(12):
        mu = rand_measure(rng, n=int(rng.integers(1, 5)), d=2)
        nu = rand_measure(rng, n=int(rng.integers(1, 5)), d=2)
        cost = squared_distance_matrix(mu.points, nu.points)
        ref = bruteforce.min_cost(mu.weights, nu.weights, cost)
        assert w2(mu, nu).cost == pytest.approx(ref, rel=1e-9, abs=1e-12)


# --- 1-D sweep -------------------------------------------------------------------

def test_w2_1d_identical_diagonal():
    mu = uniform_interval(0.0, 1.0, 6)
    res = w2_1d(mu, mu)
    assert res.cost == 0.0
    assert np.array_equal(res.plan.rows, res.plan.cols)


def test_w2_1d_shifted_pairs():
    mu = from_atoms([(0.5, [0.0]), (0.5, [1.0])])
    nu = from_atoms([(0.5, [2.0]), (0.5, [3.0])])
    assert w2_1d(mu, nu).cost == pytest.approx(4.0, rel=1e-12)


def test_w2_1d_symmetric_collapse():
    mu = from_atoms([(0.5, [-1.0]), (0.5, [1.0])])
    assert w2_1d(mu, dirac([0.0])).cost == pytest.approx(1.0, rel=1e-12)


def test_w2_1d_agrees_with_simplex(rng):
    for _ in range(15):
        mu = rand_measure(rng, d=1)
        nu = rand_measure(rng, d=1)
        sweep = w2(mu, nu, method="sweep1d").cost
        simplex = w2(mu, nu, method="simplex").cost
        assert abs(sweep - simplex) <= 1e-9 * (1.0 + sweep)


def test_w2_1d_rejects_higher_dim():
    with pytest.raises(TransportError):
        w2_1d(dirac([0.0, 0.0]), dirac([1.0, 1.0]))


# --- plan validation and optimality ------------------------------------------------

def test_coupling_rejects_bad_marginals():
    mu = from_atoms([(0.5, [0.0]), (0.5, [1.0])])
    with pytest.raises(TransportError):
        Coupling(mu, mu, [0, 1], [0, 1], [0.7, 0.3])


def test_is_optimal_examples():
    mu = from_atoms([(0.5, [0.0]), (0.5, [1.0])])
    diagonal = Coupling(mu, mu, [0, 1], [0, 1], [0.5, 0.5])
    assert is_optimal(diagonal)
    # anti-monotone vertex costs 1 instead of 0
    crossed = Coupling(mu, mu, [0, 1], [1, 0], [0.5, 0.5])
    assert crossed.cost() == pytest.approx(1.0)
    assert not is_optimal(crossed)
    nu = from_atoms([(0.5, [2.0]), (0.5, [3.0])])
    monotone = w2_1d(mu, nu).plan
    assert is_optimal(monotone)


# --- geodesics ---------------------------------------------------------------------

def test_geodesic_endpoints_and_midpoint():
    plan = w2(dirac([0.0]), dirac([2.0])).plan
    assert geodesic_point(plan, 0.0).same_atoms(dirac([0.0]))
    assert geodesic_point(plan, 1.0).same_atoms(dirac([2.0]))
    assert geodesic_point(plan, 0.5).same_atoms(dirac([1.0]))


def test_geodesic_unique_plan_midpoint():
    mu = from_atoms([(0.5, [0.0]), (0.5, [1.0])])
    nu = dirac([0.5])
    mid = geodesic_point(w2(mu, nu).plan, 0.5)
    assert mid.same_atoms(from_atoms([(0.5, [0.25]), (0.5, [0.75])]), tol=1e-15)


def test_geodesic_rejects_nonoptimal_plan():
    mu = from_atoms([(0.5, [0.0]), (0.5, [1.0])])
    crossed = Coupling(mu, mu, [0, 1], [1, 0], [0.5, 0.5])
    with pytest.raises(TransportError):
        geodesic_point(crossed, 0.5)
    plan = w2(mu, mu).plan
    with pytest.raises(TransportError):
        geodesic_point(plan, 1.5)


def test_geodesic_constant_speed(rng):
    for _ in range(5):
        mu = rand_measure(rng, d=2)
        nu = rand_measure(rng, d=2)
        res = w2(mu, nu)
        total = math.sqrt(res.cost)
        ts = [0.0, 0.25, 0.5, 0.75, 1.0]
        for i, s in enumerate(ts):
            for t in ts[i + 1:]:
                ms = geodesic_point(res.plan, s)
                mt = geodesic_point(res.plan, t)
                seg = math.sqrt(w2(ms, mt).cost)
                assert abs(seg - (t - s) * total) <= 1e-7


# --- lexicographic LP ----------------------------------------------------------------

def test_lexi_dirac_pair_both_sides():
    p0 = velocity_from_atoms([(1.0, [0.0, 0.0], [1.0, -2.0])])
    p1 = velocity_from_atoms([(1.0, [2.0, 1.0], [0.5, 0.5])])
    expected = np.dot([0.0 - 2.0, 0.0 - 1.0], [1.0 - 0.5, -2.0 - 0.5])
    for objective in ("min", "max"):
        val, plan = lexi_transport_lp(p0, p1, objective)
        assert val == pytest.approx(expected, rel=1e-12)
        assert plan.n_entries == 1


def test_lexi_rhombus_face_extrema():
    phi = velocity_from_atoms([(0.5, [1.0, 0.0], [0.0, 1.0]),
                               (0.5, [-1.0, 0.0], [0.0, -1.0])])
    nu_lift = zero_velocity_lift(from_atoms([(0.5, [0.0, 1.0]),
                                             (0.5, [0.0, -1.0])]))
    lo, _ = lexi_transport_lp(phi, nu_lift, "min")
    hi, _ = lexi_transport_lp(phi, nu_lift, "max")
    assert lo == -1.0 and hi == 1.0


def test_lexi_matches_bruteforce_face_extrema(rng):
    for trial in range(15):
        equal = trial % 2 == 0
        phi0 = rand_velocity(rng, n=int(rng.integers(1, 5)), d=2, equal_weights=equal)
        phi1 = rand_velocity(rng, n=int(rng.integers(1, 5)), d=2, equal_weights=equal)
        primary = squared_distance_matrix(phi0.x, phi1.x)
        dx = phi0.x[:, None, :] - phi1.x[None, :, :]
        dv = phi0.v[:, None, :] - phi1.v[None, :, :]
        secondary = np.einsum("ijk,ijk->ij", dx, dv)
        lo_ref, hi_ref = bruteforce.face_extrema(phi0.weights, phi1.weights,
                                                 primary, secondary)
        lo, plan_lo = lexi_transport_lp(phi0, phi1, "min")
        hi, plan_hi = lexi_transport_lp(phi0, phi1, "max")
        tol = 1e-9 * (1.0 + abs(lo_ref) + abs(hi_ref))
        assert abs(lo - lo_ref) <= tol
        assert abs(hi - hi_ref) <= tol
        assert lo <= hi + tol
        # witnesses stay on the optimal face
        for plan in (plan_lo, plan_hi):
            assert is_optimal(plan.position_plan())


def test_lexi_secondary_within_bruteforce_bounds(rng):
    for _ in range(6):
        phi0 = rand_velocity(rng, n=3, d=1)
        phi1 = rand_velocity(rng, n=4, d=1)
        primary = squared_distance_matrix(phi0.x, phi1.x)
        dx = phi0.x[:, None, :] - phi1.x[None, :, :]
        dv = phi0.v[:, None, :] - phi1.v[None, :, :]
        secondary = np.einsum("ijk,ijk->ij", dx, dv)
        lo_ref, hi_ref = bruteforce.face_extrema(phi0.weights, phi1.weights,
                                                 primary, secondary)
        val, _ = lexi_transport_lp(phi0, phi1, "min")
        assert lo_ref - 1e-9 <= val <= hi_ref + 1e-9


# --- backend agreement -----------------------------------------------------------------

def test_backends_produce_identical_plans(rng):
    act, pure = load_active(), load_pure()
    if act is pure:
        pytest.skip("compiled kernel unavailable")
    for _ in range(10):
        mu = rand_measure(rng, n=int(rng.integers(2, 12)), d=2)
        nu = rand_measure(rng, n=int(rng.integers(2, 12)), d=2)
        cost = squared_distance_matrix(mu.points, nu.points)
        s1 = act.solve_transport(mu.weights, nu.weights, cost)
        s2 = pure.solve_transport(mu.weights, nu.weights, cost)
        assert s1["objective"] == s2["objective"]
        assert np.array_equal(s1["rows"], s2["rows"])
        assert np.array_equal(s1["cols"], s2["cols"])
        assert np.array_equal(s1["mass"], s2["mass"])
