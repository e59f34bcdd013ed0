"""The jitted kernels and their interpreted twins must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from pervml import _kernels
from pervml._kernels import best_split_kernel, python_impl, smo_solve
from pervml.svr import SvrParams, gram_matrix

py_best_split = python_impl(best_split_kernel)
py_smo = python_impl(smo_solve)


class TestSplitKernelPaths:
    def test_paths_identical(self, rng):
        for _ in range(60):
            n = int(rng.integers(2, 30))
            d = int(rng.integers(1, 5))
            xt = np.ascontiguousarray(rng.integers(0, 6, size=(d, n)) / 5.0)
            g = rng.normal(size=n)
            h = np.ones(n)
            lam = float(rng.uniform(0, 2))
            alpha = float(rng.uniform(0, 0.3))
            gamma = float(rng.uniform(0, 0.1))
            jit_out = best_split_kernel(xt, g, h, lam, alpha, gamma)
            py_out = py_best_split(xt, g, h, lam, alpha, gamma)
            assert jit_out == py_out

    def test_constant_columns_yield_no_split(self):
        xt = np.zeros((2, 5))
        g = np.arange(5.0)
        h = np.ones(5)
        gain, col, thr = best_split_kernel(xt, g, h, 1.0, 0.0, 0.0)
        assert col == -1


class TestSmoPaths:
    def test_paths_identical(self, rng):
        params = SvrParams(kernel="rbf", gamma=0.5)
        for _ in range(20):
            n = int(rng.integers(2, 16))
            X = rng.uniform(size=(n, 2))
            y = rng.uniform(size=n)
            K = np.ascontiguousarray(gram_matrix(params, X, X))
            args = (K, y, 10.0, 0.05, 1e-3, 10_000)
            jit_beta, jit_up, jit_low, jit_it, jit_ok = smo_solve(*args)
            py_beta, py_up, py_low, py_it, py_ok = py_smo(K.copy(), y.copy(), *args[2:])
            np.testing.assert_array_equal(jit_beta, py_beta)
            assert (jit_up, jit_low, jit_it, jit_ok) == (py_up, py_low, py_it, py_ok)


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="already running the fallback")
def test_env_flag_selects_fallback():
    code = (
        "from pervml._kernels import NUMBA_ENABLED, best_split_kernel\n"
        "assert not NUMBA_ENABLED\n"
        "assert not hasattr(best_split_kernel, 'py_func')\n"
    )
    env = dict(os.environ, PERVML_NO_NUMBA="1")
    subprocess.run([sys.executable, "-c", code], check=True, env=env)


def test_jit_enabled_by_default_here():
    assert hasattr(best_split_kernel, "py_func") == _kernels.NUMBA_ENABLED
