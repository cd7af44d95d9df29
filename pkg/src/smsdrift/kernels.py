"""Hot numeric kernels with numba and pure-numpy implementations.

Every kernel exists twice: ``<name>_numba`` and ``<name>_numpy``. The public
name dispatches on :data:`smsdrift._accel.USE_NUMBA`. Both variants are always
importable so tests and the benchmark can compare them directly.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, prange

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# phase-aligned weighted sum over frames
# --------------------------------------------------------------------------

def _axis_phases(d, k):
    # (T, K) table of exp(2 pi i k d_t)
    return np.exp(1j * TWO_PI * np.outer(d, k))


def aligned_sum_numpy(Y, d1, d2, k1, k2, w):
    """S[a, b] = sum_t w[t] exp(2 pi i (k1[a] d1[t] + k2[b] d2[t])) Y[t, a, b]."""
    e1 = _axis_phases(d1, k1) * w[:, None]
    e2 = _axis_phases(d2, k2)
    return np.einsum("ta,tab->ab", e1, Y * e2[:, None, :])


@njit(parallel=True)
def aligned_sum_numba(Y, d1, d2, k1, k2, w):
    T, K1, K2 = Y.shape
    c1 = np.empty((T, K1))
    s1 = np.empty((T, K1))
    c2 = np.empty((T, K2))
    s2 = np.empty((T, K2))
    for t in range(T):
        for a in range(K1):
            ang = TWO_PI * k1[a] * d1[t]
            c1[t, a] = np.cos(ang) * w[t]
            s1[t, a] = np.sin(ang) * w[t]
        for b in range(K2):
            ang = TWO_PI * k2[b] * d2[t]
            c2[t, b] = np.cos(ang)
            s2[t, b] = np.sin(ang)
    out = np.empty((K1, K2), dtype=np.complex128)
    # modes are independent; each accumulates sequentially in t (Kahan)
    for a in prange(K1):
        for b in range(K2):
            sr = 0.0
            si = 0.0
            cr = 0.0
            ci = 0.0
            for t in range(T):
                pr = c1[t, a] * c2[t, b] - s1[t, a] * s2[t, b]
                pi = c1[t, a] * s2[t, b] + s1[t, a] * c2[t, b]
                y = Y[t, a, b]
                tr = pr * y.real - pi * y.imag - cr
                ti = pr * y.imag + pi * y.real - ci
                ur = sr + tr
                ui = si + ti
                cr = (ur - sr) - tr
                ci = (ui - si) - ti
                sr = ur
                si = ui
            out[a, b] = complex(sr, si)
    return out


# --------------------------------------------------------------------------
# band-limited synthesis at arbitrary points
# --------------------------------------------------------------------------

def eval_points_numpy(C, k1, k2, p1, p2):
    """Re sum_ab C[a, b] exp(2 pi i (k1[a] p1 + k2[b] p2)) for each point."""
    e1 = _axis_phases(p1, k1)
    e2 = _axis_phases(p2, k2)
    return ((e1 @ C) * e2).sum(axis=1).real


@njit(parallel=True)
def eval_points_numba(C, k1, k2, p1, p2):
    K1, K2 = C.shape
    P = p1.shape[0]
    out = np.empty(P)
    for p in prange(P):
        e2r = np.empty(K2)
        e2i = np.empty(K2)
        for b in range(K2):
            ang = TWO_PI * k2[b] * p2[p]
            e2r[b] = np.cos(ang)
            e2i[b] = np.sin(ang)
        acc = 0.0
        for a in range(K1):
            # real part of e1_a * sum_b C[a, b] e2_b
            rr = 0.0
            ri = 0.0
            for b in range(K2):
                z = C[a, b]
                rr += z.real * e2r[b] - z.imag * e2i[b]
                ri += z.real * e2i[b] + z.imag * e2r[b]
            ang = TWO_PI * k1[a] * p1[p]
            acc += np.cos(ang) * rr - np.sin(ang) * ri
        out[p] = acc
    return out


# --------------------------------------------------------------------------
# windowed DFT of scattered observations, grouped by frame
# --------------------------------------------------------------------------

def point_dft_numpy(values, p1, p2, frame, T, k1, k2, scale):
    """Y[t, a, b] = scale * sum_{p: frame[p] = t} v_p exp(-2 pi i (k1[a] p1 + k2[b] p2))."""
    out = np.zeros((T, k1.size, k2.size), dtype=np.complex128)
    order = np.argsort(frame, kind="stable")
    bounds = np.searchsorted(frame[order], np.arange(T + 1))
    for t in range(T):
        idx = order[bounds[t]:bounds[t + 1]]
        if idx.size == 0:
            continue
        e1 = np.exp(-1j * TWO_PI * np.outer(k1, p1[idx]))
        e2 = np.exp(-1j * TWO_PI * np.outer(p2[idx], k2))
        out[t] = (e1 * values[idx]) @ e2
    return out * scale


@njit(parallel=True)
def point_dft_numba(values, p1, p2, frame, T, k1, k2, scale):
    K1 = k1.shape[0]
    K2 = k2.shape[0]
    P = values.shape[0]
    order = np.argsort(frame, kind="mergesort")
    starts = np.zeros(T + 1, dtype=np.int64)
    for p in range(P):
        starts[frame[p] + 1] += 1
    for t in range(T):
        starts[t + 1] += starts[t]
    out = np.zeros((T, K1, K2), dtype=np.complex128)
    for t in prange(T):
        for q in range(starts[t], starts[t + 1]):
            p = order[q]
            v = values[p] * scale
            e2r = np.empty(K2)
            e2i = np.empty(K2)
            for b in range(K2):
                ang = -TWO_PI * k2[b] * p2[p]
                e2r[b] = np.cos(ang)
                e2i[b] = np.sin(ang)
            for a in range(K1):
                ang = -TWO_PI * k1[a] * p1[p]
                c1 = np.cos(ang) * v
                s1 = np.sin(ang) * v
                for b in range(K2):
                    out[t, a, b] += complex(c1 * e2r[b] - s1 * e2i[b],
                                            c1 * e2i[b] + s1 * e2r[b])
    return out


if USE_NUMBA:
    aligned_sum = aligned_sum_numba
    eval_points = eval_points_numba
    point_dft = point_dft_numba
else:
    aligned_sum = aligned_sum_numpy
    eval_points = eval_points_numpy
    point_dft = point_dft_numpy
