"""Acceptance suite: one test per criterion, each printing a PASS line with
its runtime (run with ``pytest tests/test_acceptance.py -v -s``)."""

import math
import time
from contextlib import contextmanager

import numpy as np

from wassdyn import fields
from wassdyn.analysis import (CurveSamples, analytic_lift, analytic_splitting,
                              cauchy_gap_check, contraction_check,
                              error_rate_study, evi_table, limit_envelope,
                              same_step_allowance)
from wassdyn.euler import euler_run, interpolate
from wassdyn.fields import MeasureSampler, dissipativity_certificate, evaluate
from wassdyn.identities import run_suite
from wassdyn.measures import dirac, from_atoms, uniform_interval
from wassdyn.pairings import pairing_l_nu, pairing_r, pairing_r_nu
from wassdyn.transport import w2


@contextmanager
def budget(criterion: str, seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    print(f"\n[PASS] {criterion} ({elapsed:.2f}s < {seconds:.0f}s)")
    assert elapsed < seconds, f"{criterion}: runtime {elapsed:.2f}s over budget"


def test_criterion_1_splitting_exactness():
    with budget("criterion 1: splitting-particle exactness", 5.0):
        spec = fields.splitting_particle()
        # point-mass start: the scheme reproduces the exact flow on the grid
        mu0 = dirac([0.0])
        traj = euler_run(spec, mu0, 0.125, 1.0, 2.0)
        for n, measure in enumerate(traj.measures):
            ref = analytic_splitting(mu0, n * traj.tau)
            assert math.sqrt(w2(measure, ref).cost) <= 1e-12
        # uniform-law start at n = 200 vs a finer discretization of the
        # exact solution
        nu0 = uniform_interval(0.0, 1.0, 200)
        traj = euler_run(spec, nu0, 0.125, 1.0, 2.0)
        exact = analytic_splitting((0.0, 1.0), 1.0, n=2000)
        err = math.sqrt(w2(traj.measures[-1], exact).cost)
        assert err <= 0.02


def test_criterion_2_pairing_values():
    with budget("criterion 2: pairing values", 2.0):
        nu = uniform_interval(0.0, 1.0, 100)
        phi = evaluate(fields.splitting_particle(), nu)
        assert abs(pairing_r_nu(phi, dirac([0.0])).value - 0.25) <= 0.01
        assert abs(w2(dirac([0.0]), nu).cost - 1.0 / 3.0) <= 1e-3
        from wassdyn.measures import velocity_from_atoms
        phi = velocity_from_atoms([(0.5, [1.0, 0.0], [0.0, 1.0]),
                                   (0.5, [-1.0, 0.0], [0.0, -1.0])])
        nu0 = from_atoms([(0.5, [0.0, 1.0]), (0.5, [0.0, -1.0])])
        assert pairing_r_nu(phi, nu0).value == -1.0
        assert pairing_l_nu(phi, nu0).value == 1.0


def test_criterion_3_dissipativity_certificates():
    with budget("criterion 3: dissipativity certificates", 10.0):
        n_pairs = 50
        rotation = dissipativity_certificate(
            fields.rotation(), MeasureSampler(dim=2, seed=0), 0.0, n_pairs)
        assert rotation.passed
        potential = dissipativity_certificate(
            fields.potential("quadratic"), MeasureSampler(dim=2, seed=1),
            -1.0, n_pairs)
        assert potential.passed
        splitting = dissipativity_certificate(
            fields.splitting_particle(), MeasureSampler(dim=1, seed=2),
            0.5, n_pairs)
        assert splitting.passed
        # velocity field +x must fail at lambda = 0 with residual >= W2^2
        flipped = fields.per_particle_map("identity")
        sampler = MeasureSampler(dim=1, seed=3)
        report = dissipativity_certificate(flipped, sampler, 0.0, n_pairs)
        assert not report.passed
        for i in range(n_pairs):
            mu0, mu1 = sampler.pair(i)
            residual = pairing_r(evaluate(flipped, mu0),
                                 evaluate(flipped, mu1)).value
            assert residual >= w2(mu0, mu1).cost - 1e-9


def test_criterion_4_convergence_order():
    with budget("criterion 4: convergence order", 30.0):
        taus = [2.0**-k for k in range(3, 10)]
        theta = from_atoms([(0.5, [-1.0]), (0.5, [1.0])])
        spec = fields.constant(theta)
        horizon, L = 1.0, 1.5
        fit = error_rate_study(spec, dirac([0.0]), lambda t: dirac([0.0]),
                               taus, horizon, L)
        for tau, err in zip(fit.taus, fit.errors):
            target = math.sqrt(horizon * tau)
            assert abs(err - target) <= 0.02 * target
        assert abs(fit.slope - 0.5) <= 0.02

        mu_rot = dirac([1.0, 0.0])
        rot_fit = error_rate_study(fields.rotation(), mu_rot,
                                   lambda t: analytic_lift("rotation90", mu_rot, t),
                                   taus, horizon, L)
        assert 0.5 <= rot_fit.slope <= 1.05

        # every run sits inside the discrete-vs-limit envelope
        for tau, err in zip(fit.taus, fit.errors):
            assert err <= limit_envelope(L, tau, horizon)
        for tau, err in zip(rot_fit.taus, rot_fit.errors):
            assert err <= limit_envelope(L, tau, horizon)
        for tau in (taus[2], taus[4]):
            traj = euler_run(spec, dirac([0.0]), tau, horizon, L)
            for t in np.linspace(0.0, 1.0, 11):
                err = math.sqrt(w2(interpolate(traj, float(t)), dirac([0.0])).cost)
                assert err <= limit_envelope(L, tau, float(t))


def test_criterion_5_cauchy_and_stability_envelopes():
    with budget("criterion 5: refinement and stability envelopes", 30.0):
        theta = from_atoms([(0.5, [-1.0]), (0.5, [1.0])])
        horizon, L, theta_env = 1.0, 1.5, 2.0
        cases = [
            (fields.constant(theta), dirac([0.0]), dirac([0.3])),
            (fields.rotation(), dirac([1.0, 0.0]), dirac([0.0, 0.5])),
        ]
        for spec, mu0, mu1 in cases:
            for tau, eta in ((0.1, 0.05), (0.02, 0.01)):
                run_a = euler_run(spec, mu0, tau, horizon, L)
                run_b = euler_run(spec, mu0, eta, horizon, L)
                assert cauchy_gap_check(run_a, run_b, theta_env, 0.0) <= 0.0
            # same-step two-data bound with the lambda = 0 allowance
            for tau in (0.1, 0.02):
                ta = euler_run(spec, mu0, tau, horizon, L)
                tb = euler_run(spec, mu1, tau, horizon, L)
                w0 = math.sqrt(w2(mu0, mu1).cost)
                for k, t in enumerate(ta.times):
                    dist = math.sqrt(w2(ta.measures[k], tb.measures[k]).cost)
                    bound = w0 + same_step_allowance(L, float(t), tau, 0.0)
                    assert dist - bound <= 1e-9


def test_criterion_6_evi_discrimination():
    with budget("criterion 6: EVI discrimination", 10.0):
        spec = fields.splitting_particle()
        times = np.linspace(0.0, 1.0, 21)
        mu0 = dirac([0.0])
        flow = CurveSamples.from_function(lambda t: analytic_splitting(mu0, t),
                                          times)
        _rows, residual, quad_budget = evi_table(flow, spec, dirac([0.0]), 0.5)
        assert residual <= quad_budget
        stationary = CurveSamples(times, tuple(mu0 for _ in times))
        nu = uniform_interval(0.0, 1.0, 100)
        _rows, violation, quad_budget = evi_table(stationary, spec, nu, 0.5)
        assert violation > quad_budget
        assert violation >= 0.05


def test_criterion_7_contraction():
    with budget("criterion 7: contraction", 10.0):
        splitting = fields.splitting_particle()
        excess = contraction_check(splitting, dirac([0.0]), dirac([0.1]),
                                   1e-2, 1.0, 0.5, 2.0)
        assert excess <= 1e-7
        target = from_atoms([(0.5, [-1.0]), (0.5, [1.0])])
        toward = fields.toward_measure(target, sign=1.0)
        mu0 = from_atoms([(0.5, [-0.5]), (0.5, [0.5])])
        mu1 = from_atoms([(0.5, [-0.3]), (0.5, [0.7])])
        excess = contraction_check(toward, mu0, mu1, 1e-2, 1.0, -1.0, 2.0)
        assert excess <= 1e-7
        ta = euler_run(toward, mu0, 1e-2, 1.0, 2.0)
        tb = euler_run(toward, mu1, 1e-2, 1.0, 2.0)
        ratio = (math.sqrt(w2(ta.measures[-1], tb.measures[-1]).cost)
                 / math.sqrt(w2(mu0, mu1).cost))
        assert abs(ratio - math.exp(-1.0)) <= 0.1 * math.exp(-1.0)


def test_criterion_8_pairing_calculus_suite():
    with budget("criterion 8: pairing-calculus property suite", 60.0):
        rows, failures = run_suite(n_instances=100, seed=0, max_atoms=6,
                                   max_dim=3)
        oracle_rows = [r for r in rows if r[0].startswith("oracle")]
        assert len(oracle_rows) >= 20  # brute-force reference exercised
        assert failures == []
