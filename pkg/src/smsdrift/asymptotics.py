"""Asymptotic covariance of the drift estimator and the degeneracy check.

Σ = Σ_k |f_k|² q_k and Σ~ = Σ_k (σ²_A Re(f_k)² + σ²_B Im(f_k)²) q_k, with
q_k the time covariance of grad_θ <k, δ_t>. For linear drift q_k = k k'/12.
The noise limits σ²_A, σ²_B are taken as one constant ``sigma_sq``; for complex
noise with independent N(0, s²/2) real and imaginary parts pass s²/2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .drift_models import DriftParams, drift_gradient

log = logging.getLogger(__name__)


class SingularCovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class CovariancePair:
    Sigma: np.ndarray
    SigmaTilde: np.ndarray
    determinant: float


def _modes(f):
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] % 2 == 0:
        raise ValueError("coefficients must form an odd square window")
    K = f.shape[0]
    k = np.arange(K, dtype=float) - (K - 1) // 2
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return f.ravel(), k1.ravel(), k2.ravel()


def sigma_determinant(f) -> float:
    """det Σ for linear drift via (1/144) Σ_{k,l} |f_k|²|f_l|² (k1² l2² - k1 k2 l1 l2)."""
    c, k1, k2 = _modes(f)
    a = np.abs(c) ** 2
    # the double sum factorises into products of single sums
    s11 = np.sum(a * k1 * k1)
    s22 = np.sum(a * k2 * k2)
    s12 = np.sum(a * k1 * k2)
    return float((s11 * s22 - s12 * s12) / 144.0)


def linear_drift_covariances(f, sigma_sq: float) -> CovariancePair:
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    c, k1, k2 = _modes(f)
    kk = np.stack([np.stack([k1 * k1, k1 * k2]), np.stack([k1 * k2, k2 * k2])])  # (2, 2, n)
    a = np.abs(c) ** 2
    b = sigma_sq * (c.real ** 2 + c.imag ** 2)
    S = kk @ a / 12.0
    St = kk @ b / 12.0
    return CovariancePair(S, St, sigma_determinant(f))


def general_covariances(f, params: DriftParams, sigma_sq: float, n_quad: int = 2048) -> CovariancePair:
    """Σ, Σ~ for any polynomial family, q_k by midpoint quadrature in t."""
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    c, k1, k2 = _modes(f)
    t = (np.arange(n_quad) + 0.5) / n_quad
    G = np.stack([drift_gradient(params, s) for s in t])  # (n_quad, dim, 2)
    K = np.stack([k1, k2])                                  # (2, n)
    g = np.einsum("tdr,rn->tnd", G, K)                      # grad <k, δ_t>
    second = np.einsum("tnd,tne->nde", g, g) / n_quad
    mean = g.mean(axis=0)
    q = second - np.einsum("nd,ne->nde", mean, mean)
    a = np.abs(c) ** 2
    S = np.einsum("n,nde->de", a, q)
    St = np.einsum("n,nde->de", sigma_sq * a, q)
    return CovariancePair(S, St, float(np.linalg.det(S)))


def clt_covariance(pair: CovariancePair) -> np.ndarray:
    """(1/4π²) Σ⁻¹ Σ~ Σ⁻¹, the limit covariance of √T (θ̂ - θ0)."""
    S = np.asarray(pair.Sigma, dtype=float)
    det = float(np.linalg.det(S))
    tr = float(np.trace(S))
    if tr <= 0 or det <= 1e-12 * tr * tr:
        raise SingularCovarianceError(
            "Σ is singular: the image is constant along some direction, so the "
            "drift component along it is not identifiable")
    Si = np.linalg.inv(S)
    C = Si @ np.asarray(pair.SigmaTilde, dtype=float) @ Si / (4 * np.pi ** 2)
    return 0.5 * (C + C.T)


def _constant_along(f, direction, N: int = 64) -> bool:
    # check f(y + r u) = f(y) on an N×N grid for the rounded direction u
    c, k1, k2 = _modes(f)
    u = np.round(np.asarray(direction) * N) / N
    if not np.any(u):
        return True
    keep = np.abs(c) > 0
    phase = np.exp(2j * np.pi * (k1 * u[0] + k2 * u[1]))
    return bool(np.all(np.abs(phase[keep] - 1) < 1e-9))


def is_directionally_constant(f, tolerance: float = 1e-12):
    """Null direction of Σ when det Σ <= tolerance · trace²; otherwise None.

    A constant image reports (1, 0).
    """
    pair = linear_drift_covariances(f, 1.0)
    S = pair.Sigma
    tr = float(np.trace(S))
    if tr <= 0:
        return np.array([1.0, 0.0])
    if pair.determinant > tolerance * tr * tr:
        return None
    vals, vecs = np.linalg.eigh(S)
    v = vecs[:, 0]
    v = v / np.linalg.norm(v)
    # sign convention: first nonzero entry positive
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    v = np.where(np.abs(v) < 1e-15, 0.0, v)
    if not _constant_along(f, v):
        log.warning("null direction %s is not a grid-period direction of f", v)
    return v
