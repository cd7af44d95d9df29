"""Motion-blur measures from smoothed Sobel gradients.

Images are indexed I[i, j] with i along x1 and j along x2. The Sobel mask S_x
differentiates along j, so the spatial gradient in (x1, x2) order is
(G_y, G_x). All convolutions extend the image periodically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

GAUSS_KERNEL = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=float) / 16.0
SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float) / 8.0
SOBEL_Y = SOBEL_X.T.copy()

_DEGENERATE = 1e-12


class BlurError(ValueError):
    pass


def _check(image) -> np.ndarray:
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or min(img.shape) < 3:
        raise BlurError("blur measures need a 2D image of at least 3x3 pixels")
    return img


def gauss_smooth(image, passes: int = 2) -> np.ndarray:
    img = _check(image)
    for _ in range(passes):
        img = correlate(img, GAUSS_KERNEL, mode="wrap")
    return img


def sobel_gradient(image):
    """(G_x, G_y) by 3x3 correlation with the 1/8-normalised Sobel masks."""
    img = _check(image)
    return correlate(img, SOBEL_X, mode="wrap"), correlate(img, SOBEL_Y, mode="wrap")


def spatial_gradient(image, smooth: bool = True):
    """Gradient components along (x1, x2) of the (smoothed) image."""
    img = gauss_smooth(image) if smooth else _check(image)
    gx, gy = sobel_gradient(img)
    return gy, gx


@dataclass(frozen=True)
class StructureTensor:
    d11: float
    d12: float
    d22: float

    @classmethod
    def of(cls, image, smooth: bool = True) -> "StructureTensor":
        g1, g2 = spatial_gradient(image, smooth)
        return cls(float(np.sum(g1 * g1)), float(np.sum(g1 * g2)), float(np.sum(g2 * g2)))

    def J(self, phi):
        c, s = np.cos(phi), np.sin(phi)
        return self.d11 * c * c + 2 * self.d12 * c * s + self.d22 * s * s

    def matrix(self) -> np.ndarray:
        return np.array([[self.d11, self.d12], [self.d12, self.d22]])


def motion_blur_m2(image):
    """Return (m2, φ_min) with φ_min in [0, π).

    m2 = log J(φ_max) / J(φ_min); +inf when the image is constant along φ_min.
    """
    D = StructureTensor.of(image)
    phi_m = 0.5 * np.arctan2(2 * D.d12, D.d11 - D.d22)
    a, b = D.J(phi_m), D.J(phi_m + np.pi / 2)
    phi_min = phi_m if a <= b else phi_m + np.pi / 2
    jmin, jmax = min(a, b), max(a, b)
    phi_min = float(np.mod(phi_min, np.pi))
    if jmax <= 0:
        raise BlurError("blur is undefined for a constant image")
    if jmin <= _DEGENERATE * jmax:
        return float("inf"), phi_min
    return float(np.log(jmax / jmin)), phi_min


def motion_blur_known_direction(image, direction) -> float:
    """m~2 = log Σ<grad, Rot u>² / Σ<grad, u>² for the unit vector u along ``direction``."""
    u = np.asarray(direction, dtype=float)
    nrm = np.hypot(u[0], u[1])
    if not nrm > 0:
        raise BlurError("motion direction must be nonzero")
    u = u / nrm
    g1, g2 = spatial_gradient(image)
    along = u[0] * g1 + u[1] * g2
    across = -u[1] * g1 + u[0] * g2
    den = float(np.sum(along * along))
    num = float(np.sum(across * across))
    if den <= 0:
        return float("inf")
    if num <= 0:
        return float("-inf")
    return float(np.log(num / den))
