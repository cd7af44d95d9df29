"""File formats: localization CSV, text-directory stacks and the DRFT binary."""
from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .frames import FrameStack, LocalizationTable

MAGIC = b"DRFT"
# version 1: header, data, counts; version 2 appends a uint8 mask
_HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------- localizations

def read_localizations(path, n_frames: int | None = None) -> LocalizationTable:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "x1,x2,frame":
            raise FormatError(f"{path}: expected header 'x1,x2,frame', got {header!r}")
        body = fh.read()
    if body.strip():
        arr = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    else:
        arr = np.zeros((0, 3))
    if arr.shape[1] != 3:
        raise FormatError(f"{path}: expected 3 columns")
    frame = arr[:, 2].astype(np.int64)
    if np.any(frame != arr[:, 2]):
        raise FormatError(f"{path}: frame column must hold integers")
    if n_frames is None:
        n_frames = int(frame.max()) if frame.size else 1
    return LocalizationTable(arr[:, 0], arr[:, 1], frame, n_frames)


def write_localizations(table: LocalizationTable, path) -> None:
    with Path(path).open("w") as fh:
        fh.write("x1,x2,frame\n")
        for a, b, f in zip(table.x1, table.x2, table.frame):
            fh.write(f"{float(a)!r},{float(b)!r},{int(f)}\n")


# ---------------------------------------------------------------- grids

def read_grid(path) -> np.ndarray:
    g = np.loadtxt(path, ndmin=2)
    if g.shape[0] != g.shape[1]:
        raise FormatError(f"{path}: grid is not square ({g.shape})")
    return g


def write_grid(grid, path) -> None:
    np.savetxt(path, np.asarray(grid, dtype=float), fmt="%.17g")


# ---------------------------------------------------------------- stacks

def write_stack_dir(stack: FrameStack, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for t in range(stack.T):
        write_grid(stack.data[t], d / f"frame_{t:04d}.txt")
    np.savetxt(d / "counts.txt", stack.counts, fmt="%d")
    if stack.mask is not None:
        np.save(d / "mask.npy", np.packbits(stack.mask, axis=None))


def read_stack_dir(directory) -> FrameStack:
    d = Path(directory)
    files = sorted(d.glob("frame_*.txt"))
    if not files:
        raise FormatError(f"{d}: no frame_*.txt files")
    data = np.stack([read_grid(f) for f in files])
    counts = np.atleast_1d(np.loadtxt(d / "counts.txt", dtype=np.int64))
    mask = None
    if (d / "mask.npy").exists():
        bits = np.load(d / "mask.npy")
        mask = np.unpackbits(bits, count=data.size).astype(bool).reshape(data.shape)
    return FrameStack(data, counts, mask)


def write_stack_bin(stack: FrameStack, path) -> None:
    version = 2 if stack.mask is not None else 1
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, version, stack.T, stack.N))
        fh.write(np.ascontiguousarray(stack.data, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(stack.counts, dtype="<f8").tobytes())
        if stack.mask is not None:
            fh.write(np.ascontiguousarray(stack.mask, dtype=np.uint8).tobytes())


def read_stack_bin(path) -> FrameStack:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short")
    magic, version, T, N = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version not in (1, 2):
        raise FormatError(f"{path}: unsupported version {version}")
    off = _HEADER.size
    n = T * N * N
    need = off + 8 * (n + T) + (n if version == 2 else 0)
    if len(raw) != need:
        raise FormatError(f"{path}: expected {need} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(T, N, N).astype(float)
    off += 8 * n
    counts = np.frombuffer(raw, dtype="<f8", count=T, offset=off).astype(np.int64)
    off += 8 * T
    mask = None
    if version == 2:
        mask = np.frombuffer(raw, dtype=np.uint8, count=n, offset=off).reshape(T, N, N).astype(bool)
    return FrameStack(data, counts, mask)


def read_stack(path) -> FrameStack:
    p = Path(path)
    if p.is_dir():
        return read_stack_dir(p)
    return read_stack_bin(p)


def write_stack(stack: FrameStack, path) -> None:
    p = Path(path)
    if p.suffix in (".bin", ".drft"):
        write_stack_bin(stack, p)
    else:
        write_stack_dir(stack, p)


# ---------------------------------------------------------------- preview

def write_pgm(image, path) -> None:
    """8-bit binary PGM with values min-max scaled to 0..255."""
    a = np.asarray(image, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros(a.shape) if hi <= lo else (a - lo) / (hi - lo)
    pix = np.round(scaled * 255).astype(np.uint8)
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
