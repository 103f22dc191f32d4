import numpy as np
import pytest

from wassdyn.measures import DiscreteMeasure, VelocityMeasure


def rand_measure(rng, n=None, d=1, equal_weights=False):
    if n is None:
        n = int(rng.integers(1, 7))
    pts = rng.uniform(-1.0, 1.0, size=(n, d))
    if equal_weights:
        w = np.full(n, 1.0 / n)
    else:
        w = rng.uniform(0.2, 1.0, size=n)
        w = w / w.sum()
    return DiscreteMeasure(pts, w)


def rand_velocity(rng, n=None, d=1, equal_weights=False):
    mu = rand_measure(rng, n=n, d=d, equal_weights=equal_weights)
    vel = rng.uniform(-1.0, 1.0, size=mu.points.shape)
    return VelocityMeasure(mu.points, vel, mu.weights)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
