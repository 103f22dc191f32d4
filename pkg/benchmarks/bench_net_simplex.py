#!/usr/bin/env python3
"""Benchmark the transport kernel backends.

Times the compiled extension against the interpreted fallback on random
planar point clouds of growing size, plus one lexicographic two-stage solve.

    python3 benchmarks/bench_net_simplex.py [--sizes 50 100 200] [--repeat 3]
"""

import argparse
import time

import numpy as np

from wassdyn._kernels import active_backend, load_active, load_pure
from wassdyn.measures import VelocityMeasure
from wassdyn.transport import lexi_transport_lp


def cloud(rng, n):
    pts = rng.normal(size=(n, 2))
    return pts, np.full(n, 1.0 / n)


def time_solver(kernel, a, b, cost, repeat):
    best = float("inf")
    sol = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        sol = kernel.solve_transport(a, b, cost)
        best = min(best, time.perf_counter() - t0)
    return best, sol


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 300])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    act, pure = load_active(), load_pure()
    if act is pure:
        print("compiled kernel not available; benchmarking the fallback only")
    print(f"active backend: {active_backend()}")
    print(f"{'n':>5} {'pivots':>7} {'compiled[s]':>12} {'python[s]':>11} {'speedup':>8}")

    rng = np.random.default_rng(0)
    for n in args.sizes:
        x, a = cloud(rng, n)
        y, b = cloud(rng, n)
        cost = ((x[:, None, :] - y[None, :, :]) ** 2).sum(-1)
        t_act, sol_act = time_solver(act, a, b, cost, args.repeat)
        t_pure, sol_pure = time_solver(pure, a, b, cost, args.repeat)
        assert sol_act["objective"] == sol_pure["objective"], "backend mismatch"
        print(f"{n:>5} {sol_act['n_pivots']:>7} {t_act:>12.4f} {t_pure:>11.4f} "
              f"{t_pure / t_act:>8.1f}x")

    # two-stage lexicographic solve through the public API
    n = max(args.sizes)
    x, a = cloud(rng, n)
    y, b = cloud(rng, n)
    phi0 = VelocityMeasure(x, rng.normal(size=(n, 2)), a)
    phi1 = VelocityMeasure(y, rng.normal(size=(n, 2)), b)
    for name, kernel in (("compiled", act), ("python", pure)):
        t0 = time.perf_counter()
        value, _plan = lexi_transport_lp(phi0, phi1, "min", backend=kernel)
        dt = time.perf_counter() - t0
        print(f"lexicographic n={n} [{name}]: value={value:+.6f} in {dt:.4f}s")


if __name__ == "__main__":
    main()
