#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the hot paths (Gauss-Seidel sweeps, evaluation, Jacobian assembly,
power iteration) and one full certification run on a 1000-variable random
quadratic system, then prints per-backend timings and speedups.
"""

import argparse
import random
import sys
import time
from fractions import Fraction

import numpy as np

import ppscert as pc
from ppscert import backends


def random_quadratic(n, seed=7):
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(n)]
    equations = []
    for i in range(n):
        poly = [
            pc.Monomial.make(Fraction(3, 10)),
            pc.Monomial.make(Fraction(2, 5), {(i + 1) % n: 1}),
        ]
        a, b = rng.randrange(n), rng.randrange(n)
        poly.append(pc.Monomial.make(Fraction(1, 10), {a: 2} if a == b else {a: 1, b: 1}))
        equations.append(poly)
    return pc.PolySystem(names, equations)


def time_call(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(name, system, sweeps):
    backend = backends.set_backend(name)
    fv = system.float_view()
    st = fv.jacobian_structure()
    x = np.full(system.n, 0.5)
    results = {}

    def run_sweeps():
        y = np.zeros(system.n)
        backend.iterate(fv, y, 0.0, sweeps, True, 1e12)

    # warm up jit compilation before timing
    run_sweeps()
    results[f"gauss-seidel x{sweeps}"] = time_call(run_sweeps)
    results["evaluate"] = time_call(lambda: backend.eval_system(fv, x), repeat=20)
    results["jacobian values"] = time_call(lambda: backend.jacobian_values(fv, st, x), repeat=20)

    data = backend.jacobian_values(fv, st, x)
    v0 = np.ones(system.n)
    results["power iteration (tol 1e-10)"] = time_call(
        lambda: backend.power_iteration(data, st.indices, st.indptr, v0, 1e-10, 100_000)
    )
    results["full certify"] = time_call(lambda: pc.solve(system), repeat=3)
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--vars", type=int, default=1000)
    parser.add_argument("--sweeps", type=int, default=200)
    args = parser.parse_args(argv)

    system = random_quadratic(args.vars)
    print(f"system: {system.n} variables, {sum(len(e) for e in system.equations)} terms\n")
    all_results = {}
    for name in ("numba", "numpy"):
        try:
            all_results[name] = bench_backend(name, system, args.sweeps)
        except ImportError:
            print(f"backend {name} unavailable, skipping")
    backends.set_backend("")

    if len(all_results) == 2:
        width = max(len(k) for k in all_results["numba"])
        print(f"{'kernel':<{width}} {'numba':>12} {'numpy':>12} {'speedup':>9}")
        for key in all_results["numba"]:
            a = all_results["numba"][key]
            b = all_results["numpy"][key]
            print(f"{key:<{width}} {a * 1e3:>10.2f}ms {b * 1e3:>10.2f}ms {b / a:>8.1f}x")
    else:
        for name, results in all_results.items():
            print(f"[{name}]")
            for key, value in results.items():
                print(f"  {key}: {value * 1e3:.2f}ms")
    return 0


if __name__ == "__main__":
    sys.exit(main())
