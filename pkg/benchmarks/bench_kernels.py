"""Time the numba kernels against their numpy fallbacks.

Sizes mirror real workloads: the contrast sum at T=2000 on the 0.2N window,
residual synthesis at every observed pixel, and the windowed DFT of a
localization table. Run with ``python benchmarks/bench_kernels.py``.
"""
import argparse
import timeit

import numpy as np

from smsdrift import kernels
from smsdrift._accel import HAS_NUMBA


def cases(rng, scale: float):
    T = int(2000 * scale)
    K = 51  # 0.2 * 256 -> half width 25
    k = np.arange(K, dtype=float) - K // 2
    w = np.full(T, 1.0 / T)
    Y = rng.normal(size=(T, K, K)) + 1j * rng.normal(size=(T, K, K))
    yield ("aligned_sum", (Y, rng.random(T), rng.random(T), k, k, w))

    P = int(65536 * scale)
    k9 = np.arange(-4, 5, dtype=float)
    C = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    yield ("eval_points", (C, k9, k9, rng.random(P), rng.random(P)))

    P = int(200_000 * scale)
    frame = rng.integers(0, T, P)
    yield ("point_dft", (np.ones(P), rng.random(P), rng.random(P), frame, T, k, k, 1.0 / 65536))


def best_of(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=0.25, help="fraction of the full problem size")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba is not installed; only the numpy path can run")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'numpy [s]':>10} {'numba [s]':>10} {'speed-up':>9} {'max diff':>9}")
    for name, a in cases(rng, args.scale):
        f_np = getattr(kernels, f"{name}_numpy")
        t_np = best_of(f_np, a, args.repeat)
        if HAS_NUMBA:
            f_nb = getattr(kernels, f"{name}_numba")
            f_nb(*a)  # compile (or load from cache) outside the timing
            t_nb = best_of(f_nb, a, args.repeat)
            diff = float(np.max(np.abs(f_nb(*a) - f_np(*a))))
            print(f"{name:<12} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f}x {diff:>9.1e}")
        else:
            print(f"{name:<12} {t_np:>10.4f} {'-':>10} {'-':>9} {'-':>9}")


if __name__ == "__main__":
    main()
