import os
import subprocess
import sys

import numpy as np
import pytest

from smsdrift import kernels
from smsdrift._accel import HAS_NUMBA

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


def _aligned_inputs(rng, T=13, K=7):
    Y = rng.normal(size=(T, K, K)) + 1j * rng.normal(size=(T, K, K))
    k = np.arange(K, dtype=float) - K // 2
    w = rng.random(T)
    return Y, rng.normal(size=T), rng.normal(size=T), k, k.copy(), w / w.sum()


@needs_numba
def test_aligned_sum_agrees(rng):
    args = _aligned_inputs(rng)
    np.testing.assert_allclose(kernels.aligned_sum_numba(*args), kernels.aligned_sum_numpy(*args),
                               rtol=1e-12, atol=1e-13)


@needs_numba
def test_eval_points_agrees(rng):
    K = 9
    C = rng.normal(size=(K, K)) + 1j * rng.normal(size=(K, K))
    k = np.arange(K, dtype=float) - K // 2
    p1, p2 = rng.random(300), rng.random(300)
    np.testing.assert_allclose(kernels.eval_points_numba(C, k, k, p1, p2),
                               kernels.eval_points_numpy(C, k, k, p1, p2), rtol=1e-11, atol=1e-12)


@needs_numba
def test_point_dft_agrees(rng):
    P, T = 2000, 6
    v = rng.random(P)
    p1, p2 = rng.random(P), rng.random(P)
    frame = rng.integers(0, T, P)
    k = np.arange(-4, 5, dtype=float)
    a = kernels.point_dft_numba(v, p1, p2, frame, T, k, k, 0.01)
    b = kernels.point_dft_numpy(v, p1, p2, frame, T, k, k, 0.01)
    np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-12)


def test_point_dft_direct(rng):
    P = 50
    v, p1, p2 = rng.random(P), rng.random(P), rng.random(P)
    frame = rng.integers(0, 2, P)
    k = np.arange(-2, 3, dtype=float)
    out = kernels.point_dft(v, p1, p2, frame, 2, k, k, 1.0)
    sel = frame == 1
    direct = np.einsum("p,pa,pb->ab", v[sel], np.exp(-2j * np.pi * np.outer(p1[sel], k)),
                       np.exp(-2j * np.pi * np.outer(p2[sel], k)))
    np.testing.assert_allclose(out[1], direct, atol=1e-12)


def test_env_flag_selects_numpy():
    code = ("from smsdrift import _accel, kernels; "
            "print(_accel.USE_NUMBA, kernels.aligned_sum is kernels.aligned_sum_numpy)")
    env = dict(os.environ, SMSDRIFT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.split() == ["False", "True"]
