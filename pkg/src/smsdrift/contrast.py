"""Empirical and population contrast functionals.

The tilde contrast is minus the energy of the realigned mean spectrum,

    M~(θ) = -Σ_k |Σ_t ω_t h_k(δ_t^θ) Y^t_k|²,   h_k(δ) = exp(2πi<k, δ>),

and the full contrast adds the θ-free term Σ_k Σ_t ω_t |Y^t_k|², which makes
it a weighted sum of squared deviations and hence nonnegative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .drift_models import DriftFamily, DriftParams, _drift_arrays, frame_times
from .spectral import SpectralStack, half_width, window_modes


class ContrastError(ValueError):
    pass


@dataclass(frozen=True)
class ContrastConfig:
    xi: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.xi < 1:
            raise ContrastError("xi must be >= 1")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ContrastError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ContrastError("weights must sum to 1")
            object.__setattr__(self, "weights", w)

    def frame_weights(self, T: int) -> np.ndarray:
        if self.weights is None:
            return np.full(T, 1.0 / T)
        if self.weights.shape != (T,):
            raise ContrastError(f"expected {T} weights, got {self.weights.shape}")
        return self.weights

    @classmethod
    def from_counts(cls, xi: float, counts) -> "ContrastConfig":
        """ω_t = n_t / Σ n_s."""
        c = np.asarray(counts, dtype=float)
        tot = c.sum()
        if tot <= 0:
            raise ContrastError("count weights need at least one observation")
        w = c / tot
        w[-1] += 1.0 - w.sum()  # exact unit sum for the validator
        return cls(xi, np.clip(w, 0.0, None))


def default_xi_simulation(T: int) -> float:
    return float(np.ceil(np.sqrt(T)))


def default_xi_localization(N: int) -> float:
    return 0.2 * N


def _prepare(stack: SpectralStack, config: ContrastConfig):
    if half_width(config.xi) > half_width(stack.xi):
        raise ContrastError(f"contrast window xi={config.xi} exceeds stack window xi={stack.xi}")
    sub = stack.restrict(config.xi)
    Y = np.ascontiguousarray(sub.coeffs, dtype=np.complex128)
    return Y, window_modes(config.xi), config.frame_weights(stack.T)


def aligned_mean(Y, k, w, d1, d2) -> np.ndarray:
    """Σ_t ω_t h_k(δ_t) Y^t_k for every window mode."""
    return kernels.aligned_sum(Y, np.ascontiguousarray(d1, dtype=float),
                               np.ascontiguousarray(d2, dtype=float), k, k, w)


def tilde_contrast(params: DriftParams, stack: SpectralStack, config: ContrastConfig) -> float:
    Y, k, w = _prepare(stack, config)
    d1, d2 = _drift_arrays(params.family, params.vector, frame_times(stack.T))
    S = aligned_mean(Y, k, w, d1, d2)
    return -float(np.sum(S.real ** 2 + S.imag ** 2))


def baseline_energy(stack: SpectralStack, config: ContrastConfig) -> float:
    """θ-independent part Σ_k Σ_t ω_t |Y^t_k|²."""
    Y, _, w = _prepare(stack, config)
    per_frame = np.sum(Y.real ** 2 + Y.imag ** 2, axis=(1, 2))
    return float(np.dot(w, per_frame))


def full_contrast(params: DriftParams, stack: SpectralStack, config: ContrastConfig) -> float:
    return baseline_energy(stack, config) + tilde_contrast(params, stack, config)


class Objective:
    """Fast θ ↦ tilde contrast closure used by the optimiser.

    Preprocessing (window restriction, weights, frame times) happens once.
    ``fixed_t0`` turns the jump family into a 6-parameter problem.
    """

    def __init__(self, stack: SpectralStack, family: DriftFamily, config: ContrastConfig):
        self.Y, self.k, self.w = _prepare(stack, config)
        self.family = family
        self.times = frame_times(stack.T)
        self.nfev = 0

    def drift(self, theta):
        return _drift_arrays(self.family, np.asarray(theta, dtype=float), self.times)

    def __call__(self, theta) -> float:
        self.nfev += 1
        d1, d2 = self.drift(theta)
        S = aligned_mean(self.Y, self.k, self.w, d1, d2)
        return -float(np.sum(S.real ** 2 + S.imag ** 2))

    def aligned(self, theta) -> np.ndarray:
        d1, d2 = self.drift(theta)
        return aligned_mean(self.Y, self.k, self.w, d1, d2)


def population_contrast(theta: DriftParams, theta0: DriftParams, f_coeffs,
                        n_quad: int = 2048) -> float:
    """-Σ_k |f_k|² |∫_0^1 h_k(δ_t^θ - δ_t^θ0) dt|², midpoint rule in t.

    The sum runs over the window carried by ``f_coeffs`` (odd square array).
    """
    f = np.asarray(f_coeffs)
    K = f.shape[0]
    k = np.arange(K) - (K - 1) // 2
    t = (np.arange(n_quad) + 0.5) / n_quad
    a1, a2 = _drift_arrays(theta.family, theta.vector, t)
    b1, b2 = _drift_arrays(theta0.family, theta0.vector, t)
    e1 = np.exp(2j * np.pi * np.outer(a1 - b1, k))
    e2 = np.exp(2j * np.pi * np.outer(a2 - b2, k))
    integral = np.einsum("ta,tb->ab", e1, e2) / n_quad
    return -float(np.sum(np.abs(f) ** 2 * np.abs(integral) ** 2))
