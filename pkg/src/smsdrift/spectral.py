"""Windowed 2D Fourier coefficients, the shift operator and band-limited synthesis.

Coefficients use the 1/N² normalisation, so the (0, 0) mode is the pixel mean,
and live on the square window k_r ∈ {-h, ..., h} with h = ⌊ξ/2⌋. Array axis 0
is the x1 coordinate and axis 1 is x2; pixel j sits at x_j = j / N.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels

TWO_PI = 2.0 * np.pi
_FFT_CHUNK = 64


class SpectralError(ValueError):
    pass


def half_width(xi: float) -> int:
    if xi < 1:
        raise SpectralError(f"cutoff xi must be >= 1, got {xi}")
    return int(np.floor(xi / 2.0))


def window_modes(xi: float) -> np.ndarray:
    """Integer mode indices -h..h as float64 (handy for the phase kernels)."""
    h = half_width(xi)
    return np.arange(-h, h + 1, dtype=float)


def _check_window(N: int, xi: float) -> int:
    if N < 2:
        raise SpectralError("grid side N must be >= 2")
    if xi > N:
        raise SpectralError(f"cutoff xi={xi} exceeds grid size N={N}")
    return half_width(xi)


def _boundary_weights(N: int, h: int) -> np.ndarray:
    # For even N with 2h == N the modes -N/2 and N/2 alias onto the same bin;
    # each gets half of it so that synthesis stays an exact inverse.
    w = np.ones(2 * h + 1)
    if 2 * h == N:
        w[0] = w[-1] = 0.5
    return w


def _extract(F: np.ndarray, N: int, h: int) -> np.ndarray:
    """Pick window modes from full (..., N, N) FFT output (unnormalised)."""
    idx = np.arange(-h, h + 1) % N
    out = F[..., idx[:, None], idx[None, :]] / (N * N)
    bw = _boundary_weights(N, h)
    if bw[0] != 1.0:
        out = out * bw[:, None] * bw[None, :]
    return out


def dft2(frame, xi: float) -> np.ndarray:
    """Windowed coefficients Y_k = N^-2 Σ_j Z_j e^{-2πi<k, x_j>} of one frame."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2 or frame.shape[0] != frame.shape[1]:
        raise SpectralError("frame must be a square 2D grid")
    N = frame.shape[0]
    h = _check_window(N, xi)
    return _extract(scipy.fft.fft2(frame), N, h)


def dft2_stack(data, xi: float, chunk: int = _FFT_CHUNK) -> np.ndarray:
    """dft2 of every frame in a (T, N, N) array, computed in chunks."""
    data = np.asarray(data)
    T, N, _ = data.shape
    h = _check_window(N, xi)
    K = 2 * h + 1
    out = np.empty((T, K, K), dtype=np.complex128)
    for s in range(0, T, chunk):
        block = np.asarray(data[s:s + chunk], dtype=float)
        out[s:s + chunk] = _extract(scipy.fft.fft2(block, axes=(1, 2)), N, h)
    return out


@dataclass(frozen=True)
class SpectralStack:
    """Per-frame windowed coefficients, shape (T, K, K)."""
    coeffs: np.ndarray
    xi: float
    N: int

    @property
    def T(self) -> int:
        return self.coeffs.shape[0]

    @property
    def modes(self) -> np.ndarray:
        return window_modes(self.xi)

    def restrict(self, xi: float) -> "SpectralStack":
        """Sub-window for a smaller cutoff."""
        h0 = half_width(self.xi)
        h = half_width(xi)
        if h > h0:
            raise SpectralError(f"requested cutoff {xi} exceeds stack cutoff {self.xi}")
        if h == h0:
            return SpectralStack(self.coeffs, xi, self.N)
        sl = slice(h0 - h, h0 + h + 1)
        return SpectralStack(np.ascontiguousarray(self.coeffs[:, sl, sl]), xi, self.N)

    @classmethod
    def from_frames(cls, data, xi: float) -> "SpectralStack":
        data = np.asarray(data)
        return cls(dft2_stack(data, xi), float(xi), data.shape[1])


def binned_spectra(table, T: int, N: int, xi: float):
    """Windowed spectra of the T position histograms, straight from a table.

    Equal to ``dft2_stack`` of :func:`bin_localizations` but never builds the
    dense (T, N, N) stack. Returns (SpectralStack, counts).
    """
    from .frames import bin_indices
    h = _check_window(N, xi)
    b, i1, i2, _ = bin_indices(table, T, N)
    k = np.arange(-h, h + 1, dtype=float)
    Y = kernels.point_dft(np.ones(b.size), i1 / N, i2 / N, b, T, k, k, 1.0 / (N * N))
    bw = _boundary_weights(N, h)
    if bw[0] != 1.0:
        Y = Y * bw[:, None] * bw[None, :]
    return SpectralStack(Y, float(xi), N), np.bincount(b, minlength=T)


def phase_shift(coeffs, delta, xi: float | None = None) -> np.ndarray:
    """Multiply Y_k by h_k(δ) = exp(2πi<k, δ>)."""
    coeffs = np.asarray(coeffs)
    K = coeffs.shape[-1]
    k = np.arange(K) - (K - 1) // 2 if xi is None else window_modes(xi)
    e1 = np.exp(1j * TWO_PI * k * delta[0])
    e2 = np.exp(1j * TWO_PI * k * delta[1])
    return coeffs * e1[:, None] * e2[None, :]


def _imag_tol(coeffs) -> float:
    return 1e-9 * max(1.0, float(np.abs(coeffs).sum()))


def reconstruct_image(coeffs, N: int) -> np.ndarray:
    """Synthesis Σ_k c_k e^{2πi<k, x>} on the N×N pixel grid, real part."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    K = coeffs.shape[0]
    h = (K - 1) // 2
    if coeffs.shape != (K, K) or K % 2 == 0:
        raise SpectralError("coefficients must be an odd square window")
    if 2 * h > N:
        raise SpectralError(f"window half-width {h} too large for N={N}")
    full = np.zeros((N, N), dtype=np.complex128)
    idx = np.arange(-h, h + 1) % N
    np.add.at(full, (idx[:, None], idx[None, :]), coeffs)
    img = scipy.fft.ifft2(full) * (N * N)
    if np.max(np.abs(img.imag), initial=0.0) > _imag_tol(coeffs):
        raise SpectralError("coefficients are not conjugate symmetric")
    return np.ascontiguousarray(img.real)


def evaluate_at(coeffs, points) -> np.ndarray:
    """Band-limited function Re Σ_k c_k e^{2πi<k, p>} at (P, 2) points."""
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    K = coeffs.shape[0]
    k = np.arange(K, dtype=float) - (K - 1) // 2
    pts = np.asarray(points, dtype=float)
    return kernels.eval_points(coeffs, k, k,
                               np.ascontiguousarray(pts[:, 0]),
                               np.ascontiguousarray(pts[:, 1]))


def is_conjugate_symmetric(coeffs, tol: float = 1e-12) -> bool:
    c = np.asarray(coeffs)
    return bool(np.max(np.abs(c - np.conj(c[::-1, ::-1])), initial=0.0) <= tol * max(1.0, np.abs(c).max(initial=0.0)))
