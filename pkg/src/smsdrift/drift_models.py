"""Parametric drift families with δ_0 = 0.

Polynomial families store the x1 coefficients for t, t², ..., t^d1 followed by
the x2 coefficients for t, ..., t^d2. The jump family stores
(θ11, θ12, θ13, θ21, θ22, θ23, t0) and is linear with slope (θ11, θ21) up to
t0, then restarts from (θ13, θ23) with slope (θ12, θ22).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THETA_BOX = 2.0
T0_RANGE = (0.02, 0.98)


class DriftError(ValueError):
    pass


@dataclass(frozen=True)
class DriftFamily:
    kind: str  # "polynomial" or "jump"
    d1: int = 1
    d2: int = 1

    def __post_init__(self):
        if self.kind not in ("polynomial", "jump"):
            raise DriftError(f"unknown drift kind {self.kind!r}")
        if self.kind == "polynomial" and (self.d1 < 1 or self.d2 < 1):
            raise DriftError("polynomial degrees must be >= 1")

    @property
    def dim(self) -> int:
        return 7 if self.kind == "jump" else self.d1 + self.d2

    @property
    def is_jump(self) -> bool:
        return self.kind == "jump"

    @classmethod
    def polynomial(cls, d1: int, d2: int | None = None) -> "DriftFamily":
        return cls("polynomial", int(d1), int(d1 if d2 is None else d2))

    @classmethod
    def jump(cls) -> "DriftFamily":
        return cls("jump", 1, 1)

    @classmethod
    def parse(cls, text: str) -> "DriftFamily":
        """Parse ``linear``, ``quadratic``, ``cubic``, ``poly:<d1>:<d2>`` or ``jump``."""
        s = text.strip().lower()
        named = {"linear": 1, "quadratic": 2, "cubic": 3}
        if s in named:
            return cls.polynomial(named[s])
        if s == "jump":
            return cls.jump()
        if s.startswith("poly:"):
            parts = s.split(":")
            if len(parts) != 3:
                raise DriftError(f"bad family spec {text!r}, expected poly:<d1>:<d2>")
            try:
                return cls.polynomial(int(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise DriftError(f"bad family spec {text!r}") from exc
        raise DriftError(f"unknown drift family {text!r}")

    def __str__(self) -> str:
        if self.is_jump:
            return "jump"
        if self.d1 == self.d2 and self.d1 <= 3:
            return {1: "linear", 2: "quadratic", 3: "cubic"}[self.d1]
        return f"poly:{self.d1}:{self.d2}"


@dataclass(frozen=True)
class DriftParams:
    family: DriftFamily
    theta: tuple

    def __init__(self, family: DriftFamily, theta):
        theta = tuple(float(v) for v in np.asarray(theta, dtype=float).ravel())
        if len(theta) != family.dim:
            raise DriftError(f"{family} expects {family.dim} parameters, got {len(theta)}")
        if family.is_jump and not 0.0 < theta[6] < 1.0:
            raise DriftError("jump time t0 must lie in (0, 1)")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "theta", theta)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.theta)

    def in_box(self) -> bool:
        th = self.vector
        if self.family.is_jump:
            lo, hi = T0_RANGE
            return bool(np.all(np.abs(th[:6]) <= THETA_BOX) and lo <= th[6] <= hi)
        return bool(np.all(np.abs(th) <= THETA_BOX))

    def to_csv(self) -> str:
        return ",".join(repr(v) for v in self.theta)

    @classmethod
    def from_csv(cls, family: DriftFamily, text: str) -> "DriftParams":
        try:
            vals = [float(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise DriftError(f"cannot parse parameter vector {text!r}") from exc
        return cls(family, vals)


def _drift_arrays(family: DriftFamily, theta: np.ndarray, t: np.ndarray):
    """Vectorised drift; returns (d1, d2) arrays shaped like t. No domain checks."""
    if family.is_jump:
        a11, a12, a13, a21, a22, a23, t0 = theta
        pre = t <= t0
        d1 = np.where(pre, a11 * t, a12 * (t - t0) + a13)
        d2 = np.where(pre, a21 * t, a22 * (t - t0) + a23)
        return d1, d2
    c1 = theta[:family.d1]
    c2 = theta[family.d1:]
    d1 = np.zeros_like(t)
    d2 = np.zeros_like(t)
    # Horner without the constant term
    for c in c1[::-1]:
        d1 = (d1 + c) * t
    for c in c2[::-1]:
        d2 = (d2 + c) * t
    return d1, d2


def drift_path(params: DriftParams, times) -> np.ndarray:
    """Drift at many times as an (n, 2) array."""
    t = np.asarray(times, dtype=float)
    if np.any((t < 0) | (t > 1)) or not np.all(np.isfinite(t)):
        raise DriftError("drift times must lie in [0, 1]")
    d1, d2 = _drift_arrays(params.family, params.vector, t)
    return np.stack([d1, d2], axis=-1)


def evaluate_drift(params: DriftParams, t: float) -> tuple:
    p = drift_path(params, np.array([t]))[0]
    return float(p[0]), float(p[1])


def frame_times(T: int) -> np.ndarray:
    """Frame times 0, 1/T, ..., (T-1)/T."""
    return np.arange(T) / T


def round_drift(delta, N: int):
    """Round each component to the nearest multiple of 1/N, ties upward."""
    if N < 1:
        raise DriftError("N must be >= 1")
    d = np.floor(np.asarray(delta, dtype=float) * N + 0.5) / N
    if isinstance(delta, (tuple, list)):
        return tuple(float(v) for v in d)
    return d


def drift_gradient(params: DriftParams, t: float) -> np.ndarray:
    """(dim, 2) matrix of partial derivatives of δ_t with respect to θ."""
    fam = params.family
    if fam.is_jump:
        raise DriftError("drift gradient is not defined for the jump family")
    if not 0.0 <= t <= 1.0:
        raise DriftError("t must lie in [0, 1]")
    g = np.zeros((fam.dim, 2))
    g[:fam.d1, 0] = [t ** p for p in range(1, fam.d1 + 1)]
    g[fam.d1:, 1] = [t ** p for p in range(1, fam.d2 + 1)]
    return g


def average_direction(params: DriftParams) -> np.ndarray:
    """Overall drift direction used for the known-direction blur measure.

    For polynomial families this is δ_1. For the jump family the two linear
    pieces are combined as t0·δ_{t0} + (1-t0)·(δ_1 - δ_{t0+}).
    """
    th = params.vector
    if params.family.is_jump:
        t0 = th[6]
        return t0 ** 2 * th[[0, 3]] + (1 - t0) ** 2 * th[[1, 4]]
    return drift_path(params, [1.0])[0]
