"""Optional numba acceleration.

Set ``SMSDRIFT_DISABLE_NUMBA=1`` to force the pure-numpy code paths, e.g. for
debugging or on platforms without an LLVM toolchain.
"""
import os

_FLAG = os.environ.get("SMSDRIFT_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba as _numba
    # skip the TBB probe, which warns on older system TBB builds
    _numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    _numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or an identity decorator without numba."""
    if not HAS_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("fastmath", False)
    return _numba.njit(*args, **kwargs)


if HAS_NUMBA:
    prange = _numba.prange
else:  # pragma: no cover
    prange = range


def process_pool(n_jobs: int, **kwargs):
    """Worker pool started with ``spawn``: forking after numba's OpenMP
    layer has started aborts the child."""
    import multiprocessing
    from concurrent.futures import ProcessPoolExecutor
    return ProcessPoolExecutor(max_workers=n_jobs, mp_context=multiprocessing.get_context("spawn"),
                               **kwargs)
