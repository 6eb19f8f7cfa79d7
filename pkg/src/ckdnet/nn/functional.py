"""Forward and backward passes for every layer type, as plain functions.

All feature maps are NHWC. Convolutions are 3x3, stride 1, zero "same"
padding, computed by unrolling 3x3 patches (im2col) into a matrix product.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import LabelError, ShapeError

PROB_FLOOR = 1e-12


def _im2col(x: np.ndarray) -> np.ndarray:
    """Unroll zero-padded 3x3 patches: [n,h,w,c] -> [n*h*w, 9*c].

    Column order is (dy, dx, c), matching a row-major [3,3,c,cout] kernel.
    """
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    patches = np.stack(
        [xp[:, dy:dy + h, dx:dx + w, :] for dy in range(3) for dx in range(3)],
        axis=3,
    )
    return patches.reshape(n * h * w, 9 * c)


def _col2im(cols: np.ndarray, shape: tuple[int, int, int, int]) -> np.ndarray:
    n, h, w, c = shape
    patches = cols.reshape(n, h, w, 9, c)
    out = np.zeros((n, h + 2, w + 2, c), dtype=cols.dtype)
    for k in range(9):
        dy, dx = divmod(k, 3)
        out[:, dy:dy + h, dx:dx + w, :] += patches[:, :, :, k, :]
    return out[:, 1:h + 1, 1:w + 1, :]


def _check_conv(x: np.ndarray, kernels: np.ndarray) -> None:
    if x.ndim != 4:
        raise ShapeError(f"conv input must be [n,h,w,c], got {x.shape}")
    if kernels.shape[:2] != (3, 3):
        raise ShapeError(f"kernels must be 3x3, got {kernels.shape}")
    if x.shape[3] != kernels.shape[2]:
        raise ShapeError(
            f"input has {x.shape[3]} channels but kernels expect {kernels.shape[2]}")


def conv2d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    _check_conv(x, kernels)
    n, h, w, _ = x.shape
    cout = kernels.shape[3]
    out = _im2col(x) @ kernels.reshape(-1, cout) + bias
    return out.reshape(n, h, w, cout)


def conv2d_backward(grad_out: np.ndarray, cached_input: np.ndarray, kernels: np.ndarray,
                    need_input_grad: bool = True):
    """Return ``(grad_input, grad_kernels, grad_bias)``.

    ``grad_input`` is None when ``need_input_grad`` is false (first layer).
    """
    _check_conv(cached_input, kernels)
    n, h, w, _ = cached_input.shape
    cout = kernels.shape[3]
    if grad_out.shape != (n, h, w, cout):
        raise ShapeError(f"grad_out shape {grad_out.shape} != forward output {(n, h, w, cout)}")
    g = grad_out.reshape(-1, cout)
    grad_k = (_im2col(cached_input).T @ g).reshape(kernels.shape)
    grad_b = g.sum(axis=0)
    grad_in = None
    if need_input_grad:
        grad_in = _col2im(g @ kernels.reshape(-1, cout).T, cached_input.shape)
    return grad_in, grad_k, grad_b


def maxpool2x2_forward(x: np.ndarray):
    """2x2 max pooling, stride 2; a trailing odd row/column is dropped.

    Returns the pooled map and the in-window argmax (0..3, row-major, first
    occurrence on ties) for every output element.
    """
    if x.ndim != 4:
        raise ShapeError(f"pool input must be [n,h,w,c], got {x.shape}")
    n, h, w, c = x.shape
    if h < 2 or w < 2:
        raise ShapeError(f"pooling needs h, w >= 2, got {x.shape}")
    h2, w2 = h // 2, w // 2
    win = (x[:, :2 * h2, :2 * w2, :]
           .reshape(n, h2, 2, w2, 2, c)
           .transpose(0, 1, 3, 5, 2, 4)
           .reshape(n, h2, w2, c, 4))
    pos = np.argmax(win, axis=4)
    out = np.take_along_axis(win, pos[..., None], axis=4)[..., 0]
    return out, pos


def maxpool2x2_backward(grad_out: np.ndarray, positions: np.ndarray,
                        input_shape: tuple[int, ...]) -> np.ndarray:
    n, h, w, c = input_shape
    h2, w2 = h // 2, w // 2
    if grad_out.shape != (n, h2, w2, c) or positions.shape != grad_out.shape:
        raise ShapeError(f"grad_out {grad_out.shape} does not match pooled {(n, h2, w2, c)}")
    onehot = positions[..., None] == np.arange(4)
    win = np.where(onehot, grad_out[..., None], 0).astype(grad_out.dtype)
    grad_in = np.zeros(input_shape, dtype=grad_out.dtype)
    grad_in[:, :2 * h2, :2 * w2, :] = (win.reshape(n, h2, w2, c, 2, 2)
                                       .transpose(0, 1, 4, 2, 5, 3)
                                       .reshape(n, 2 * h2, 2 * w2, c))
    return grad_in


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(grad_out: np.ndarray, cached_input: np.ndarray) -> np.ndarray:
    # derivative at exactly 0 is taken as 0
    return grad_out * (cached_input > 0)


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError(f"dense input {x.shape} does not fit weights {weights.shape}")
    return x @ weights + bias


def dense_backward(grad_out: np.ndarray, cached_input: np.ndarray, weights: np.ndarray):
    if grad_out.shape != (cached_input.shape[0], weights.shape[1]):
        raise ShapeError(f"grad_out {grad_out.shape} does not match dense output")
    return grad_out @ weights.T, cached_input.T @ grad_out, grad_out.sum(axis=0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def sparse_ce_loss(probs: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over integer labels.

    Returns the loss and its gradient with respect to the *logits* that
    produced ``probs`` (softmax fused): ``(probs - onehot) / n``.
    """
    labels = np.asarray(labels)
    n, c = probs.shape
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise LabelError(f"labels must lie in 0..{c - 1}")
    picked = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1
    grad /= n
    return loss, grad


def finite_diff_grad(loss_fn: Callable[[np.ndarray], float], param: np.ndarray,
                     epsilon: float = 1e-3) -> np.ndarray:
    """Central-difference gradient of a scalar function, evaluated in float64.

    ``param`` is perturbed in place one element at a time and restored.
    """
    x = np.asarray(param, dtype=np.float64)
    if x is not param:
        x = x.copy()
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + epsilon
        plus = loss_fn(x)
        flat[i] = orig - epsilon
        minus = loss_fn(x)
        flat[i] = orig
        gflat[i] = (plus - minus) / (2 * epsilon)
    return grad
