"""Synthetic sparse-frame experiments.

Every pixel j of the ground truth is observed once, at a uniformly drawn frame
t_j, and its (noisy) value is written at x_j + δ~_{t_j} with the rounded drift
wrapped on the torus. Random streams come from numpy's Philox bit generator
keyed by (seed, purpose, frame) through ``SeedSequence`` spawn keys, so a frame's
noise does not depend on how many other frames are simulated or in what order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .drift_models import DriftParams, drift_path, frame_times
from .frames import FrameStack, LocalizationTable

RNG_ALGORITHM = "numpy.random.Philox (4x64-10) seeded via SeedSequence"

_TIMES, _NOISE, _SPECTRAL, _IMAGE, _LOCAL = 0, 1, 2, 3, 5


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseModel:
    kind: str  # "gauss", "t2" or "poisson"
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in ("gauss", "t2", "poisson"):
            raise ValueError(f"unknown noise model {self.kind!r}")
        if self.scale < 0:
            raise ValueError("noise scale must be >= 0")

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseModel":
        return cls("gauss", float(sigma))

    @classmethod
    def student_t2(cls, scale: float = 0.1) -> "NoiseModel":
        return cls("t2", float(scale))

    @classmethod
    def poisson(cls) -> "NoiseModel":
        return cls("poisson", 0.0)

    def draw(self, f_values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "poisson":
            return rng.poisson(f_values).astype(float)
        if self.scale == 0:
            return f_values.astype(float)
        if self.kind == "gauss":
            eps = rng.standard_normal(f_values.shape)
        else:
            eps = rng.standard_t(2, f_values.shape)
        return f_values + self.scale * eps


@dataclass(frozen=True)
class SimulationSpec:
    image: np.ndarray
    drift: DriftParams
    T: int
    noise: NoiseModel
    seed: int = 0

    def __post_init__(self):
        img = np.asarray(self.image, dtype=float)
        if img.ndim != 2 or img.shape[0] != img.shape[1]:
            raise ValueError("ground-truth image must be square")
        if np.any(img < 0):
            raise ValueError("ground-truth image must be nonnegative")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        object.__setattr__(self, "image", img)


def sample_times(N: int, T: int, seed: int) -> np.ndarray:
    """N×N grid of frame indices, iid uniform on {0, ..., T-1}."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return substream(seed, _TIMES).integers(0, T, size=(N, N))


def pixel_shifts(drift: DriftParams, T: int, N: int) -> np.ndarray:
    """Integer pixel shifts ⌊N δ_t + 1/2⌋ for every frame, shape (T, 2)."""
    return np.floor(drift_path(drift, frame_times(T)) * N + 0.5).astype(np.int64)


def simulate_stack(spec: SimulationSpec) -> FrameStack:
    f = spec.image
    N, T = f.shape[0], spec.T
    times = sample_times(N, T, spec.seed)
    shifts = pixel_shifts(spec.drift, T, N)
    data = np.zeros((T, N, N))
    mask = np.zeros((T, N, N), dtype=bool)
    flat_t = times.ravel()
    order = np.argsort(flat_t, kind="stable")
    bounds = np.searchsorted(flat_t[order], np.arange(T + 1))
    for t in range(T):
        j = order[bounds[t]:bounds[t + 1]]  # raster order within the frame
        i1, i2 = np.divmod(j, N)
        vals = spec.noise.draw(f[i1, i2], substream(spec.seed, _NOISE, t))
        y1 = (i1 + shifts[t, 0]) % N
        y2 = (i2 + shifts[t, 1]) % N
        data[t, y1, y2] = vals
        mask[t, y1, y2] = True
    counts = np.diff(bounds)
    return FrameStack(data, counts, mask)


def variance_stabilize(stack: FrameStack, center: bool = False) -> FrameStack:
    """z ↦ sqrt(z + 1/4) on observed entries; unobserved entries stay 0.

    With ``center=True`` observed entries become sqrt(z + 1/4) - 1/2, so a
    zero count maps to 0 whether or not it was observed. This equals applying
    the transform to every pixel and dropping the constant 1/2, which only
    moves the θ-independent k = 0 mode, and it keeps the random sampling
    pattern of the lifted background out of the spectra.
    """
    if np.any(stack.data < 0):
        raise ValueError("variance stabilisation needs nonnegative data")
    obs = stack.observed()
    out = np.where(obs, np.sqrt(stack.data + 0.25) - (0.5 if center else 0.0), 0.0)
    return FrameStack(out, stack.counts, obs, stack.n_rejected)


def simulate_spectral(f_coeffs, drift: DriftParams, T: int, sigma: float, seed: int) -> np.ndarray:
    """Fourier drift model Y^t_k = e^{-2πi<k, δ_t>} f_k + W^t_k.

    W is independent over k and t with real and imaginary parts N(0, σ²/2).
    The drift is not rounded here. Returns a (T, K, K) array.
    """
    f = np.asarray(f_coeffs, dtype=np.complex128)
    K = f.shape[0]
    k = np.arange(K) - (K - 1) // 2
    d = drift_path(drift, frame_times(T))
    out = np.empty((T, K, K), dtype=np.complex128)
    s = sigma / np.sqrt(2.0)
    for t in range(T):
        ph = np.exp(-2j * np.pi * (k[:, None] * d[t, 0] + k[None, :] * d[t, 1]))
        z = substream(seed, _SPECTRAL, t).standard_normal((2, K, K))
        out[t] = ph * f + s * (z[0] + 1j * z[1])
    return out


def simulate_localizations(image, drift: DriftParams, n_records: int, n_frames: int,
                           seed: int) -> LocalizationTable:
    """Localization records drawn from the intensity ``image``.

    Sources are drawn with probability proportional to the pixel value and
    uniformly inside the pixel, each in a uniform raw frame t' in 1..n_frames.
    The record is the source moved by δ at time (t' - 1)/n_frames, wrapped
    onto the unit torus.
    """
    f = np.asarray(image, dtype=float)
    N = f.shape[0]
    if f.sum() <= 0:
        raise ValueError("image has no intensity")
    rng = substream(seed, _LOCAL)
    p = f.ravel() / f.sum()
    j = rng.choice(p.size, size=n_records, p=p)
    i1, i2 = np.divmod(j, N)
    x1 = (i1 + rng.random(n_records)) / N
    x2 = (i2 + rng.random(n_records)) / N
    frame = rng.integers(1, n_frames + 1, size=n_records)
    d = drift_path(drift, (frame - 1) / n_frames)
    y1 = np.mod(x1 + d[:, 0], 1.0)
    y2 = np.mod(x2 + d[:, 1], 1.0)
    # guard against mod returning 1.0 for tiny negative inputs
    y1[y1 >= 1.0] = 0.0
    y2[y2 >= 1.0] = 0.0
    return LocalizationTable(y1, y2, frame, n_frames)


def random_spectrum(xi: float, seed: int, decay: float = 1.0, n_modes: int | None = None) -> np.ndarray:
    """Conjugate-symmetric random coefficients on the ξ window, f_0 = 0.

    Amplitudes fall off like (1 + |k|²)^-decay and phases are uniform. With
    ``n_modes`` only that many random half-plane modes (plus conjugates) are kept.
    """
    from .spectral import half_width
    h = half_width(xi)
    K = 2 * h + 1
    rng = substream(seed, _SPECTRAL, 2 ** 32)
    k = np.arange(-h, h + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    amp = (1.0 + k1 ** 2 + k2 ** 2) ** (-decay)
    f = amp * np.exp(2j * np.pi * rng.random((K, K)))
    upper = (k1 > 0) | ((k1 == 0) & (k2 > 0))  # one representative per ± pair
    if n_modes is not None:
        idx = np.flatnonzero(upper.ravel())
        chosen = rng.choice(idx, size=min(n_modes, idx.size), replace=False)
        keep = np.zeros(K * K, dtype=bool)
        keep[chosen] = True
        upper = keep.reshape(K, K)
    f = np.where(upper, f, 0)
    return f + np.conj(f[::-1, ::-1])


# ---------------------------------------------------------------- test image

def _segment_distance(p1, p2, a, b):
    # distance from grid points to the segment a-b (in pixel units)
    ab = b - a
    L2 = float(ab @ ab)
    u = np.clip(((p1 - a[0]) * ab[0] + (p2 - a[1]) * ab[1]) / L2, 0.0, 1.0)
    return np.hypot(p1 - (a[0] + u * ab[0]), p2 - (a[1] + u * ab[1]))


def make_test_image(N: int = 256, seed: int = 1, mean_intensity: float = 0.045,
                    orientation: float = 2.2, spread: float = 0.3,
                    n_fibres: int = 3, fibre_width: float = 0.006,
                    fibre_length: tuple = (0.15, 0.45),
                    n_blobs: int = 14, blob_radius: tuple = (0.008, 0.015),
                    blob_spacing: float = 0.12,
                    body_fraction: float = 0.55, body_scale: float = 0.12,
                    body_aspect: float = 1.3) -> np.ndarray:
    """Deterministic cell phantom with values in [0, 1].

    Thin bright fibres, mostly aligned with ``orientation`` (radians, measured
    from the x1 axis), small bright spots on a jittered lattice (or ``n_blobs``
    random spots when ``blob_spacing`` is 0), all inside an irregular envelope,
    mixed with a smooth elliptical cell body holding ``body_fraction`` of the
    intensity. The result is rescaled (with clipping at 1) to the requested mean.
    """
    p1, p2 = np.meshgrid(np.arange(N, dtype=float), np.arange(N, dtype=float), indexing="ij")
    c = np.array([0.5, 0.5]) * N
    # irregular envelope: radius modulated by a few low harmonics
    r = np.hypot(p1 - c[0], p2 - c[1])
    ang = np.arctan2(p2 - c[1], p1 - c[0])
    radius = 0.36 * N * (1 + 0.18 * np.cos(2 * ang - 0.7) + 0.1 * np.sin(3 * ang + 1.1))
    envelope = 1.0 / (1.0 + np.exp((r - radius) / (0.02 * N)))

    rng = substream(seed, _IMAGE, 0)
    fibres = np.zeros((N, N))
    width = fibre_width * N
    for _ in range(n_fibres):
        theta = orientation + spread * rng.standard_normal()
        length = N * rng.uniform(*fibre_length)
        mid = c + rng.uniform(-0.3, 0.3, size=2) * N
        half = 0.5 * length * np.array([np.cos(theta), np.sin(theta)])
        dist = _segment_distance(p1, p2, mid - half, mid + half)
        fibres = np.maximum(fibres, rng.uniform(0.5, 1.0) * np.exp(-0.5 * (dist / width) ** 2))

    rng = substream(seed, _IMAGE, 1)
    if blob_spacing > 0:
        # jittered lattice: even coverage keeps low-order spectral power small
        g = np.arange(-0.35, 0.35 + 1e-9, blob_spacing)
        centres = [c + (np.array([a, b]) + rng.uniform(-0.2, 0.2, 2) * blob_spacing) * N
                   for a in g for b in g]
        centres = [m for m in centres if envelope[int(m[0]) % N, int(m[1]) % N] > 0.5]
    else:
        centres = [c + rng.uniform(-0.28, 0.28, size=2) * N for _ in range(n_blobs)]
    for m in centres:
        rad = N * rng.uniform(*blob_radius)
        d2 = (p1 - m[0]) ** 2 + (p2 - m[1]) ** 2
        fibres = np.maximum(fibres, rng.uniform(0.6, 1.0) * np.exp(-0.5 * d2 / rad ** 2))

    out = fibres * envelope
    if body_fraction > 0:
        d2 = ((p1 - c[0]) / body_aspect) ** 2 + ((p2 - c[1]) * body_aspect) ** 2
        body = np.exp(-0.5 * d2 / (body_scale * N) ** 2)
        out = (1 - body_fraction) * out / out.mean() + body_fraction * body / body.mean()
    for _ in range(50):
        out = np.clip(out * (mean_intensity / out.mean()), 0.0, 1.0)
        if abs(out.mean() - mean_intensity) < 1e-6 * mean_intensity:
            break
    return out
