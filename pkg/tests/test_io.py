import json

import numpy as np

from wassdyn.io import (load_measure, load_plan, load_velocity_measure,
                        pairing_to_record, save_measure, save_pairing,
                        save_plan, save_velocity_measure)
from wassdyn.pairings import pairing_r_nu
from wassdyn.transport import w2

from conftest import rand_measure, rand_velocity


def test_measure_roundtrip_bitwise(tmp_path, rng):
    mu = rand_measure(rng, n=6, d=3)
    path = tmp_path / "mu.csv"
    save_measure(str(path), mu)
    back = load_measure(str(path))
    assert np.array_equal(back.points, mu.points)
    assert np.array_equal(back.weights, mu.weights)


def test_velocity_roundtrip_bitwise(tmp_path, rng):
    phi = rand_velocity(rng, n=5, d=2)
    path = tmp_path / "phi.csv"
    save_velocity_measure(str(path), phi)
    back = load_velocity_measure(str(path))
    assert np.array_equal(back.x, phi.x)
    assert np.array_equal(back.v, phi.v)
    assert np.array_equal(back.weights, phi.weights)


def test_single_atom_roundtrip(tmp_path):
    from wassdyn.measures import dirac
    path = tmp_path / "one.csv"
    save_measure(str(path), dirac([0.1234567890123456789, -3.0]))
    back = load_measure(str(path))
    assert back.n == 1 and back.dim == 2


def test_plan_roundtrip(tmp_path, rng):
    mu = rand_measure(rng, n=5, d=2)
    nu = rand_measure(rng, n=4, d=2)
    plan = w2(mu, nu).plan
    path = tmp_path / "plan.csv"
    save_plan(str(path), plan)
    rows, cols, mass = load_plan(str(path))
    assert np.array_equal(rows, plan.rows)
    assert np.array_equal(cols, plan.cols)
    assert np.array_equal(mass, plan.mass)


def test_pairing_record_and_file(tmp_path, rng):
    phi = rand_velocity(rng, n=4, d=2)
    nu = rand_measure(rng, n=3, d=2)
    res = pairing_r_nu(phi, nu)
    record = pairing_to_record(res)
    assert record["side"] == "right"
    assert len(record["witness_entries"]) == res.witness.n_entries
    path = tmp_path / "pairing.json"
    save_pairing(str(path), res)
    with open(path) as handle:
        assert json.load(handle)["value"] == res.value
