"""Dense row-major tensors.

Tensors are plain :class:`numpy.ndarray` objects in C order with index order
(batch, height, width, channel). The helpers below add the shape checks the
rest of the package relies on; everything else is ordinary numpy.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ShapeError

TRAIN_DTYPE = np.float32
CHECK_DTYPE = np.float64


def _check_extents(shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ShapeError(f"every extent must be >= 1, got {shape}")
    return shape


def tensor_new(shape: Sequence[int], fill: float = 0.0, dtype=TRAIN_DTYPE) -> np.ndarray:
    return np.full(_check_extents(shape), fill, dtype=dtype)


def reshape(t: np.ndarray, new_shape: Sequence[int]) -> np.ndarray:
    """Reinterpret ``t`` with a new shape without reordering its data."""
    new_shape = _check_extents(new_shape)
    if int(np.prod(new_shape)) != t.size:
        raise ShapeError(f"cannot reshape {t.shape} ({t.size} elements) to {new_shape}")
    return np.ascontiguousarray(t).reshape(new_shape)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner extents differ: {a.shape} x {b.shape}")
    return a @ b


def argmax_last_axis(t: np.ndarray) -> np.ndarray:
    """Row-wise argmax of a 2-D tensor; ties go to the lowest index."""
    if t.ndim != 2 or t.shape[1] < 1:
        raise ShapeError(f"argmax_last_axis expects [n, c] with c >= 1, got {t.shape}")
    # np.argmax returns the first occurrence of the maximum
    return np.argmax(t, axis=1)
