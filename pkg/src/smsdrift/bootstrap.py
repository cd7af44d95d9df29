"""Residual bootstrap confidence bands for the drift components.

A replicate keeps the source points x_p = y_p - δ_{t_p}^θ̂ of the observed
pixel-time pairs but reshuffles their frame labels (per-frame counts are
preserved), moves each point to x_p + δ_t^θ̂ for its new frame t and assigns
f̂(x_p) plus a residual drawn with replacement. Redrawing the frame labels
keeps the sampling noise of the image itself in the replicates; with the
original labels that part would be frozen and the bands too narrow. Phase
tables at the source points are computed once, so a replicate costs a few
small matrix products per frame plus the optimisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import process_pool
from .contrast import ContrastConfig, aligned_mean, default_xi_simulation
from .drift_models import DriftParams, _drift_arrays, drift_path, frame_times
from .estimator import OptimizerConfig, estimate_spectral, realigned_coefficients
from .frames import FrameStack
from .simulate import substream
from .spectral import SpectralStack, half_width, reconstruct_image, window_modes

_BOOT = 4  # RNG purpose key for replicate resampling
GRID_POINTS = 256


class BootstrapError(ValueError):
    pass


def _linear_shape(t):
    return np.asarray(t, dtype=float)


class _Observations:
    """Observed pixel positions grouped by frame, with phase tables."""

    def __init__(self, stack: FrameStack, K: int):
        obs = stack.observed()
        t, i1, i2 = np.nonzero(obs)  # sorted by frame
        if t.size == 0:
            raise BootstrapError("stack has no observations")
        self.N = stack.N
        self.T = stack.T
        self.frame = t
        self.y1 = i1 / stack.N
        self.y2 = i2 / stack.N
        self.values = stack.data[t, i1, i2]
        self.bounds = np.searchsorted(t, np.arange(stack.T + 1))
        self.k = np.arange(K, dtype=float) - (K - 1) // 2
        # A[p, a] = exp(-2πi k_a y_p)
        self.A1 = np.exp(-2j * np.pi * np.outer(self.y1, self.k))
        self.A2 = np.exp(-2j * np.pi * np.outer(self.y2, self.k))

    @property
    def size(self) -> int:
        return self.values.size

    def spectra(self, v) -> np.ndarray:
        """Windowed per-frame DFT of values placed at the observed positions."""
        K = self.k.size
        out = np.zeros((self.T, K, K), dtype=np.complex128)
        for t in range(self.T):
            s = slice(self.bounds[t], self.bounds[t + 1])
            if s.start < s.stop:
                out[t] = (self.A1[s] * v[s, None]).T @ self.A2[s]
        return out / (self.N * self.N)

    def synthesis(self, C, d1, d2) -> np.ndarray:
        """f(y - δ_t) at every observed y of frame t, f = Re Σ C_k e^{2πi<k,·>}."""
        out = np.empty(self.size)
        e1 = np.exp(-2j * np.pi * np.outer(d1, self.k))
        e2 = np.exp(-2j * np.pi * np.outer(d2, self.k))
        for t in range(self.T):
            s = slice(self.bounds[t], self.bounds[t + 1])
            if s.start < s.stop:
                Ct = C * e1[t][:, None] * e2[t][None, :]
                out[s] = ((np.conj(self.A1[s]) @ Ct) * np.conj(self.A2[s])).sum(axis=1).real
        return out


def _observation_scale(Y, k, w, d1, d2, counts, N) -> np.ndarray:
    # Σ_t ω_t Y^t_k ≈ f_k Σ_t ω_t n_t / N², so rescale to the intensity scale
    mass = float(np.dot(w, counts))
    if mass <= 0:
        raise BootstrapError("no observations carry weight")
    return aligned_mean(Y, k, w, d1, d2) * (N * N / mass)


def fit_image(stack: FrameStack, theta_hat: DriftParams, config: ContrastConfig | None = None) -> np.ndarray:
    """Coefficients of f̂ on the intensity scale of single observations."""
    config = config or ContrastConfig(default_xi_simulation(stack.T))
    spec = SpectralStack.from_frames(stack.data, config.xi)
    d1, d2 = _drift_arrays(theta_hat.family, theta_hat.vector, frame_times(stack.T))
    w = config.frame_weights(stack.T)
    return _observation_scale(np.ascontiguousarray(spec.coeffs), window_modes(config.xi), w,
                              d1, d2, stack.counts, stack.N)


def residuals(stack: FrameStack, theta_hat: DriftParams, f_hat=None,
              config: ContrastConfig | None = None):
    """Residuals Z - f̂(y - δ_t^θ̂) at the observed pairs and their SD."""
    config = config or ContrastConfig(default_xi_simulation(stack.T))
    C = fit_image(stack, theta_hat, config) if f_hat is None else np.asarray(f_hat, dtype=np.complex128)
    obs = _Observations(stack, C.shape[0])
    d1, d2 = _drift_arrays(theta_hat.family, theta_hat.vector, frame_times(stack.T))
    r = obs.values - obs.synthesis(C, d1, d2)
    return r, float(np.std(r))


@dataclass
class BootstrapBands:
    theta_hat: DriftParams
    sigma_hat: float
    u_plus: np.ndarray    # per component, widens the band upwards
    u_minus: np.ndarray   # per component, widens the band downwards
    alpha: float
    B: int
    replicates: np.ndarray          # (B_eff, dim)
    replicate_sigma: np.ndarray     # (B_eff,)
    n_dropped: int = 0
    grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, GRID_POINTS))
    shape: object = field(default=_linear_shape, repr=False)

    def standardized(self) -> np.ndarray:
        """Δ_t^(b) on the grid, shape (B_eff, n_grid, 2)."""
        base = drift_path(self.theta_hat, self.grid)
        curves = np.stack([drift_path(DriftParams(self.theta_hat.family, th), self.grid)
                           for th in self.replicates]) if len(self.replicates) else np.zeros((0,) + base.shape)
        return (curves - base) / self.replicate_sigma[:, None, None]

    def inside_counts(self) -> np.ndarray:
        """Replicates whose standardized curve lies in the band, per component."""
        D = self.standardized()
        g = self.shape(self.grid)
        tol = 1e-12
        lo = D >= (-self.u_plus[None, None, :] * g[None, :, None]) - tol
        hi = D <= (self.u_minus[None, None, :] * g[None, :, None]) + tol
        return np.sum(np.all(lo & hi, axis=1), axis=0)

    def band(self, t=None):
        """Lower and upper band for δ^θ0, each (n, 2)."""
        t = self.grid if t is None else np.asarray(t, dtype=float)
        d = drift_path(self.theta_hat, t)
        g = self.shape(t)[:, None]
        return d - self.sigma_hat * self.u_minus * g, d + self.sigma_hat * self.u_plus * g

    def covers(self, params: DriftParams) -> np.ndarray:
        lo, hi = self.band()
        d = drift_path(params, self.grid)
        return np.all((d >= lo - 1e-12) & (d <= hi + 1e-12), axis=0)

    def to_csv(self) -> str:
        lo, hi = self.band()
        rows = ["t,lower1,upper1,lower2,upper2"]
        rows += [f"{t:.6f},{a:.9g},{b:.9g},{c:.9g},{d:.9g}"
                 for t, a, b, c, d in zip(self.grid, lo[:, 0], hi[:, 0], lo[:, 1], hi[:, 1])]
        return "\n".join(rows) + "\n"

    def summary(self) -> str:
        return "".join([
            f"sigma_hat={float(self.sigma_hat)!r}\n",
            f"u_plus={float(self.u_plus[0])!r},{float(self.u_plus[1])!r}\n",
            f"u_minus={float(self.u_minus[0])!r},{float(self.u_minus[1])!r}\n",
            f"B={self.B}\nB_effective={len(self.replicates)}\nalpha={self.alpha!r}\n",
        ])


def minimal_band(lower_need, upper_need, keep: int):
    """Smallest u₊ + u₋ such that at least ``keep`` replicates satisfy
    lower_need[b] <= u₊ and upper_need[b] <= u₋.

    Exact sweep: the optimal u₊ is one of the (clipped) lower requirements.
    """
    a = np.maximum(np.asarray(lower_need, dtype=float), 0.0)
    b = np.maximum(np.asarray(upper_need, dtype=float), 0.0)
    n = a.size
    if keep > n or keep < 1:
        raise BootstrapError(f"cannot keep {keep} of {n} replicates")
    best = (math.inf, 0.0, 0.0)
    for up in np.unique(np.append(a, 0.0)):
        ok = b[a <= up]
        if ok.size < keep:
            continue
        um = np.partition(ok, keep - 1)[keep - 1]
        if up + um < best[0]:
            best = (up + um, float(up), float(um))
    return best[1], best[2]


def _requirements(D: np.ndarray, g: np.ndarray):
    # D: (B, n, 2). Where g == 0 the curve must be exactly 0.
    pos = g > 0
    lower = np.full(D.shape[0::2], 0.0)
    upper = np.full(D.shape[0::2], 0.0)
    if np.any(pos):
        R = D[:, pos, :] / g[pos][None, :, None]
        lower = np.max(-R, axis=1)
        upper = np.max(R, axis=1)
    zero = ~pos
    if np.any(zero):
        bad = np.any(np.abs(D[:, zero, :]) > 1e-12, axis=1)
        lower = np.where(bad, np.inf, lower)
        upper = np.where(bad, np.inf, upper)
    return lower, upper


class _Context:
    """Everything a replicate needs; shipped once to each worker."""

    def __init__(self, stack, theta_hat, config, opt, image_xi, seed, f_hat=None):
        self.family = theta_hat.family
        self.config = config
        self.opt = opt
        self.seed = seed
        self.N, self.T = stack.N, stack.T
        self.counts = stack.counts
        self.w = config.frame_weights(stack.T)
        self.times = frame_times(stack.T)
        self.h_est = half_width(config.xi)
        self.h_img = half_width(image_xi)
        H = max(self.h_est, self.h_img)
        self.k = np.arange(-H, H + 1, dtype=float)
        self.k_img = np.arange(-self.h_img, self.h_img + 1, dtype=float)

        obs = _Observations(stack, 2 * H + 1)
        self.labels = obs.frame
        self.d_hat = np.stack(_drift_arrays(self.family, theta_hat.vector, self.times), axis=1)
        # source points and their phase tables
        x1 = obs.y1 - self.d_hat[obs.frame, 0]
        x2 = obs.y2 - self.d_hat[obs.frame, 1]
        self.B1 = np.exp(-2j * np.pi * np.outer(x1, self.k))
        self.B2 = np.exp(-2j * np.pi * np.outer(x2, self.k))

        if f_hat is None:
            d1, d2 = self.d_hat[:, 0], self.d_hat[:, 1]
            Y = self._window(obs.spectra(obs.values), self.h_img)
            f_hat = _observation_scale(Y, self.k_img, self.w, d1, d2, self.counts, self.N)
        self.f_hat = np.asarray(f_hat, dtype=np.complex128)
        self.fitted = self._synth(self.f_hat, self.labels, np.zeros((self.T, 2)))
        self.resid = obs.values - self.fitted
        self.sigma_hat = float(np.std(self.resid))

    @staticmethod
    def _window(Y, h):
        H = (Y.shape[-1] - 1) // 2
        return np.ascontiguousarray(Y[:, H - h:H + h + 1, H - h:H + h + 1])

    def _groups(self, labels):
        order = np.argsort(labels, kind="stable")
        return order, np.searchsorted(labels[order], np.arange(self.T + 1))

    def _spectra(self, v, labels):
        """Per-frame DFT with point p at x_p + δ̂_{labels[p]}."""
        order, bounds = self._groups(labels)
        K = self.k.size
        e1 = np.exp(-2j * np.pi * np.outer(self.d_hat[:, 0], self.k))
        e2 = np.exp(-2j * np.pi * np.outer(self.d_hat[:, 1], self.k))
        out = np.zeros((self.T, K, K), dtype=np.complex128)
        for t in range(self.T):
            idx = order[bounds[t]:bounds[t + 1]]
            if idx.size:
                out[t] = ((self.B1[idx] * v[idx, None]).T @ self.B2[idx]) * e1[t][:, None] * e2[t][None, :]
        return out / (self.N * self.N)

    def _synth(self, C, labels, offset):
        """f(x_p + offset[labels[p]]) with f = Re Σ C_k e^{2πi<k,·>}."""
        pad = (self.k.size - C.shape[0]) // 2
        Cp = np.pad(C, pad) if pad else C
        order, bounds = self._groups(labels)
        e1 = np.exp(2j * np.pi * np.outer(offset[:, 0], self.k))
        e2 = np.exp(2j * np.pi * np.outer(offset[:, 1], self.k))
        out = np.empty(labels.size)
        for t in range(self.T):
            idx = order[bounds[t]:bounds[t + 1]]
            if idx.size:
                Ct = Cp * e1[t][:, None] * e2[t][None, :]
                out[idx] = ((np.conj(self.B1[idx]) @ Ct) * np.conj(self.B2[idx])).sum(axis=1).real
        return out

    def replicate(self, b: int):
        rng = substream(self.seed, _BOOT, b)
        labels = rng.permutation(self.labels)
        eps = self.resid[rng.integers(0, self.resid.size, self.resid.size)]
        z = self.fitted + eps
        Y = self._spectra(z, labels)
        spec = SpectralStack(self._window(Y, self.h_est), self.config.xi, self.N)
        try:
            res = estimate_spectral(spec, self.family, self.config, self.opt)
        except Exception:  # a failed replicate is dropped, not fatal
            return None
        if not res.converged or not np.all(np.isfinite(res.theta_hat.vector)):
            return None
        th = res.theta_hat.vector
        d1, d2 = _drift_arrays(self.family, th, self.times)
        C = _observation_scale(self._window(Y, self.h_img), self.k_img, self.w, d1, d2,
                               self.counts, self.N)
        # point p sits at x_p + δ̂_t; f̂^(b) is evaluated at x_p + δ̂_t - δ^(b)_t
        offset = self.d_hat - np.stack([d1, d2], axis=1)
        r = z - self._synth(C, labels, offset)
        return th, float(np.std(r))


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _run_replicate(b):
    return _WORKER_CTX.replicate(b)


def bootstrap_bands(stack: FrameStack, theta_hat: DriftParams, f_hat=None, B: int = 200,
                    alpha: float = 0.05, seed: int = 0,
                    config: ContrastConfig | None = None,
                    image_xi: float | None = None,
                    shape=_linear_shape, n_jobs: int = 1) -> BootstrapBands:
    """Hall-Pittelkow type bands around δ^θ̂ with shape g (default g(t) = t).

    ``f_hat`` may be passed as coefficients; otherwise it is fitted on the
    ``image_xi`` window (default: the estimation window).
    """
    if B < 2:
        raise BootstrapError("B must be >= 2")
    if not 0 < alpha < 1:
        raise BootstrapError("alpha must lie in (0, 1)")
    config = config or ContrastConfig(default_xi_simulation(stack.T))
    image_xi = config.xi if image_xi is None else image_xi
    if f_hat is not None:
        image_xi = 2 * ((np.asarray(f_hat).shape[0] - 1) // 2) + 1
    opt = OptimizerConfig(start=tuple(theta_hat.vector))
    ctx = _Context(stack, theta_hat, config, opt, image_xi, seed, f_hat)

    if n_jobs > 1:
        with process_pool(n_jobs, initializer=_init_worker, initargs=(ctx,)) as pool:
            out = list(pool.map(_run_replicate, range(B), chunksize=4))
    else:
        out = [ctx.replicate(b) for b in range(B)]
    good = [o for o in out if o is not None]
    if len(good) < 2:
        raise BootstrapError("fewer than two bootstrap replicates succeeded")
    reps = np.array([o[0] for o in good])
    sig = np.array([o[1] for o in good])
    bands = BootstrapBands(theta_hat, ctx.sigma_hat, np.zeros(2), np.zeros(2), alpha, B,
                           reps, sig, B - len(good), shape=shape)
    keep = math.ceil((1 - alpha) * len(good) - 1e-9)
    lower, upper = _requirements(bands.standardized(), shape(bands.grid))
    for i in range(2):
        bands.u_plus[i], bands.u_minus[i] = minimal_band(lower[:, i], upper[:, i], keep)
    return bands


def bootstrap_average_image(stack: FrameStack, bands: BootstrapBands,
                            config: ContrastConfig | None = None) -> np.ndarray:
    """Average reconstruction over the ⌊(1-α)B⌋ replicate drifts nearest to θ̂.

    Each member image realigns the original stack with a replicate drift;
    reconstruction is linear in the realigned spectrum, so the coefficients
    are averaged before a single synthesis.
    """
    config = config or ContrastConfig(default_xi_simulation(stack.T))
    n = len(bands.replicates)
    m = max(1, min(n, math.floor((1 - bands.alpha) * bands.B + 1e-9)))
    base = drift_path(bands.theta_hat, bands.grid)
    fam = bands.theta_hat.family
    dist = np.array([np.max(np.abs(drift_path(DriftParams(fam, th), bands.grid) - base))
                     for th in bands.replicates])
    nearest = np.argsort(dist, kind="stable")[:m]
    spec = SpectralStack.from_frames(stack.data, config.xi)
    C = np.mean([realigned_coefficients(spec, DriftParams(fam, bands.replicates[i]), config)
                 for i in nearest], axis=0)
    C = 0.5 * (C + np.conj(C[::-1, ::-1]))
    return reconstruct_image(C, stack.N)
