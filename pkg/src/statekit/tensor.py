"""Dense tensor primitives and the deterministic-mode switch.

Tensors are plain C-contiguous numpy arrays, rank 1 to 4, laid out row-major
with images in N,C,H,W order. float32 is the training dtype; float64 exists
so gradient checks can run at tight tolerance.

Deterministic mode pins every reduction order: ``matmul`` accumulates
strictly left-to-right over the inner axis, which makes repeated runs and
the naive convolution oracle match bit for bit. Throughput mode hands the
product to BLAS, which is free to reorder and parallelize.
"""

from __future__ import annotations

import contextlib
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, DimensionError

F32 = np.float32
F64 = np.float64

DTYPE_NAMES = {np.dtype(np.float32): "f32", np.dtype(np.float64): "f64"}
DTYPES_BY_NAME = {"f32": np.float32, "f64": np.float64}

MAX_RANK = 4

_deterministic = True


def set_deterministic(flag: bool) -> None:
    global _deterministic
    _deterministic = bool(flag)


def deterministic() -> bool:
    return _deterministic


@contextlib.contextmanager
def deterministic_mode(flag: bool = True) -> Iterator[None]:
    """Temporarily switch between deterministic and throughput kernels."""
    global _deterministic
    old = _deterministic
    _deterministic = bool(flag)
    try:
        yield
    finally:
        _deterministic = old


def check_tensor(arr: np.ndarray) -> None:
    if arr.ndim < 1 or arr.ndim > MAX_RANK:
        raise DimensionError(f"tensor rank must be 1..{MAX_RANK}, got {arr.ndim}")
    if any(e < 1 for e in arr.shape):
        raise DimensionError(f"tensor extents must be >= 1, got shape {arr.shape}")
    if arr.dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigError(f"unsupported dtype {arr.dtype}; use f32 or f64")


def tensor(data, dtype=F32, shape: Sequence[int] | None = None) -> np.ndarray:
    """Build a validated, contiguous tensor."""
    arr = np.asarray(data, dtype=dtype)
    if shape is not None:
        arr = arr.reshape(tuple(shape))
    check_tensor(arr)
    return np.ascontiguousarray(arr)


def reshape(t: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Row-major reshape; rejects any change in element count."""
    shape = tuple(int(s) for s in shape)
    n = 1
    for s in shape:
        n *= s
    if n != t.size:
        raise DimensionError(f"cannot reshape {t.shape} (size {t.size}) to {shape}")
    out = t.reshape(shape)
    check_tensor(out)
    return out


def _matmul_seq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Definitional order: one rank-1 update per inner index, left to right.
    out = np.zeros((a.shape[0], b.shape[1]), dtype=a.dtype)
    for i in range(a.shape[1]):
        out += a[:, i : i + 1] * b[i, :]
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rank-2 matrix product.

    In deterministic mode the sum over the inner axis runs strictly left to
    right. Unoptimized ``np.einsum`` on contiguous operands performs exactly
    that order when the output has at least two columns (pinned by a test
    against ``_matmul_seq``); single-column outputs take the explicit loop
    because einsum vectorizes that reduction.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    if a.dtype != b.dtype:
        raise DimensionError(f"matmul dtypes differ: {a.dtype} vs {b.dtype}")
    if not _deterministic:
        return a @ b
    a = np.ascontiguousarray(a)
    b = np.ascontiguousarray(b)
    if b.shape[1] == 1:
        return _matmul_seq(a, b)
    return np.einsum("mk,kn->mn", a, b, optimize=False)


def argmax_last(t: np.ndarray):
    """Index of the maximum over the last axis; ties go to the lowest index.

    Returns an int for rank-1 input, else an integer array with one index
    per leading slice.
    """
    check_tensor(t)
    idx = np.argmax(t, axis=-1)
    return int(idx) if idx.ndim == 0 else idx
