"""Localization tables, binned frame stacks and their superposition."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class BinningError(ValueError):
    pass


@dataclass(frozen=True)
class LocalizationTable:
    """Records (x1, x2, frame) with 1-based raw frame numbers up to ``n_frames``."""
    x1: np.ndarray
    x2: np.ndarray
    frame: np.ndarray
    n_frames: int

    def __post_init__(self):
        for name in ("x1", "x2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        object.__setattr__(self, "frame", np.asarray(self.frame, dtype=np.int64).ravel())
        if not (self.x1.size == self.x2.size == self.frame.size):
            raise BinningError("x1, x2 and frame must have equal length")
        if self.n_frames < 1:
            raise BinningError("raw frame count must be >= 1")

    def __len__(self) -> int:
        return self.x1.size

    @classmethod
    def empty(cls, n_frames: int) -> "LocalizationTable":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int64), n_frames)


@dataclass(frozen=True)
class FrameStack:
    """T frames of N×N intensities with per-frame observation counts.

    ``mask`` optionally flags the pixel-time pairs that carry an observation;
    without it, nonzero entries are taken as observed.
    """
    data: np.ndarray
    counts: np.ndarray
    mask: np.ndarray | None = None
    n_rejected: int = field(default=0, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 3 or data.shape[1] != data.shape[2]:
            raise ValueError("frame data must have shape (T, N, N)")
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (data.shape[0],):
            raise ValueError("counts must have length T")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "counts", counts)
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != data.shape:
                raise ValueError("mask must match the data shape")
            object.__setattr__(self, "mask", mask)

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]

    def observed(self) -> np.ndarray:
        return self.mask if self.mask is not None else self.data != 0

    def replace(self, data) -> "FrameStack":
        return FrameStack(data, self.counts, self.mask, self.n_rejected)


def raw_to_bin(frame, n_frames: int, T: int) -> np.ndarray:
    """0-based histogram index ⌈t'·T/T'⌉ - 1 for 1-based raw frames t'."""
    frame = np.asarray(frame, dtype=np.int64)
    # integer ceil division keeps this exact for large T'
    return -((-frame * T) // n_frames) - 1


def bin_indices(table: LocalizationTable, T: int, N: int):
    """Histogram coordinates (frame bin, row, column) of the valid records.

    Returns (b, i1, i2, n_rejected); records outside the unit square or the
    raw frame range are dropped with a warning.
    """
    if N < 2:
        raise BinningError("N must be >= 2")
    if T < 1:
        raise BinningError("T must be >= 1")
    if T > table.n_frames:
        raise BinningError(f"cannot form {T} histograms from {table.n_frames} raw frames")
    if table.n_frames % T:
        raise BinningError(f"T={T} does not divide the raw frame count {table.n_frames}")
    ok = ((table.x1 >= 0) & (table.x1 < 1) & (table.x2 >= 0) & (table.x2 < 1)
          & (table.frame >= 1) & (table.frame <= table.n_frames))
    n_bad = int(ok.size - np.count_nonzero(ok))
    if n_bad:
        log.warning("rejected %d localization records outside the unit square or frame range", n_bad)
    i1 = np.minimum((table.x1[ok] * N).astype(np.int64), N - 1)
    i2 = np.minimum((table.x2[ok] * N).astype(np.int64), N - 1)
    b = raw_to_bin(table.frame[ok], table.n_frames, T)
    return b, i1, i2, n_bad


def bin_localizations(table: LocalizationTable, T: int, N: int) -> FrameStack:
    b, i1, i2, n_bad = bin_indices(table, T, N)
    flat = (b * N + i1) * N + i2
    data = np.bincount(flat, minlength=T * N * N).astype(float).reshape(T, N, N)
    counts = np.bincount(b, minlength=T)
    return FrameStack(data, counts, None, n_bad)


def superimpose(stack: FrameStack) -> np.ndarray:
    return stack.data.sum(axis=0)
