#!/usr/bin/env python3
"""Time the jitted kernels against their interpreted twins.

The two paths execute identical floating-point operations (the test suite
asserts bit-identical results); this script measures what the compilation
buys on workloads shaped like the real ones: split searches at tree-node
sizes, and full SMO solves at training-set size.

Run:  python benchmarks/bench_kernels.py
      PERVML_NO_NUMBA=1 makes both columns the interpreted path.
"""

import time

import numpy as np

from pervml._kernels import NUMBA_ENABLED, best_split_kernel, python_impl, smo_solve
from pervml.svr import SvrParams, gram_matrix

py_best_split = python_impl(best_split_kernel)
py_smo = python_impl(smo_solve)


def timeit(func, *args, repeat=5):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = func(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_split(rng):
    print("\nsplit search (one call scans every feature x threshold candidate)")
    print(f"{'rows x cols':>14} {'jit (us)':>12} {'python (us)':>12} {'speedup':>9}")
    for n, d in ((19, 4), (100, 4), (1000, 8), (5000, 16)):
        xt = np.ascontiguousarray(rng.uniform(size=(d, n)))
        g = rng.normal(size=n)
        h = np.ones(n)
        args = (xt, g, h, 1.0, 0.1, 0.01)
        t_jit, out_jit = timeit(lambda: best_split_kernel(*args))
        t_py, out_py = timeit(lambda: py_best_split(*args))
        assert out_jit == out_py
        print(f"{f'{n} x {d}':>14} {t_jit * 1e6:>12.1f} {t_py * 1e6:>12.1f} {t_py / t_jit:>8.1f}x")


def bench_smo(rng):
    print("\nSMO solve (full dual optimization to tol=1e-3)")
    print(f"{'samples':>14} {'jit (ms)':>12} {'python (ms)':>12} {'speedup':>9}")
    params = SvrParams(kernel="rbf", gamma=0.11)
    for n in (19, 50, 150):
        X = rng.uniform(size=(n, 4))
        y = rng.uniform(size=n)
        K = np.ascontiguousarray(gram_matrix(params, X, X))
        args = (K, y, 39.0, 0.05, 1e-3, 100_000)
        t_jit, out_jit = timeit(lambda: smo_solve(*args), repeat=3)
        t_py, out_py = timeit(lambda: py_smo(*args), repeat=3)
        assert out_jit[3] == out_py[3]  # same iteration count
        print(f"{n:>14} {t_jit * 1e3:>12.2f} {t_py * 1e3:>12.2f} {t_py / t_jit:>8.1f}x")


def main():
    print(f"numba enabled: {NUMBA_ENABLED}")
    rng = np.random.default_rng(0)
    if NUMBA_ENABLED:
        # Trigger compilation outside the timed region.
        xt = np.ascontiguousarray(rng.uniform(size=(2, 8)))
        best_split_kernel(xt, rng.normal(size=8), np.ones(8), 1.0, 0.0, 0.0)
        K = np.eye(4)
        smo_solve(K, rng.uniform(size=4), 1.0, 0.1, 1e-3, 100)
    bench_split(rng)
    bench_smo(rng)


if __name__ == "__main__":
    main()
