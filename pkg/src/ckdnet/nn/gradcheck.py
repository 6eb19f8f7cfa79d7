"""Finite-difference checks of every analytic backward pass (float64).

Each ``check_*`` builds a small random instance, projects the layer output
onto a fixed random tensor to get a scalar, and compares the analytic
gradients against :func:`finite_diff_grad`. They return the worst relative
error over all gradients of that instance.
"""
from __future__ import annotations

import numpy as np

from . import functional as F

EPS = 1e-3


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)."""
    a, n = np.asarray(analytic, np.float64), np.asarray(numeric, np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.standard_normal(shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-300) * margin + x, x)


def check_conv(rng, n=1, h=5, w=5, cin=2, cout=3) -> float:
    x = rng.standard_normal((n, h, w, cin))
    k = rng.standard_normal((3, 3, cin, cout))
    b = rng.standard_normal(cout)
    r = rng.standard_normal((n, h, w, cout))
    gi, gk, gb = F.conv2d_backward(r, x, k)
    errs = [
        max_relative_error(gi, F.finite_diff_grad(lambda v: np.sum(F.conv2d_forward(v, k, b) * r), x, EPS)),
        max_relative_error(gk, F.finite_diff_grad(lambda v: np.sum(F.conv2d_forward(x, v, b) * r), k, EPS)),
        max_relative_error(gb, F.finite_diff_grad(lambda v: np.sum(F.conv2d_forward(x, k, v) * r), b, EPS)),
    ]
    return max(errs)


def check_maxpool(rng, n=1, h=6, w=6, c=2) -> float:
    # distinct values spaced well beyond 2*EPS, so no window changes its argmax
    x = rng.permutation(n * h * w * c).reshape(n, h, w, c) * 0.01 + 0.001 * rng.random((n, h, w, c))
    r = rng.standard_normal((n, h // 2, w // 2, c))
    _, pos = F.maxpool2x2_forward(x)
    gi = F.maxpool2x2_backward(r, pos, x.shape)
    num = F.finite_diff_grad(lambda v: np.sum(F.maxpool2x2_forward(v)[0] * r), x, EPS)
    return max_relative_error(gi, num)


def check_relu(rng, shape=(1, 6, 6, 3)) -> float:
    x = _away_from_zero(rng, shape)
    r = rng.standard_normal(shape)
    gi = F.relu_backward(r, x)
    return max_relative_error(gi, F.finite_diff_grad(lambda v: np.sum(F.relu(v) * r), x, EPS))


def check_dense(rng, n=3, fan_in=10, fan_out=4) -> float:
    x = rng.standard_normal((n, fan_in))
    wts = rng.standard_normal((fan_in, fan_out))
    b = rng.standard_normal(fan_out)
    r = rng.standard_normal((n, fan_out))
    gi, gw, gb = F.dense_backward(r, x, wts)
    errs = [
        max_relative_error(gi, F.finite_diff_grad(lambda v: np.sum(F.dense_forward(v, wts, b) * r), x, EPS)),
        max_relative_error(gw, F.finite_diff_grad(lambda v: np.sum(F.dense_forward(x, v, b) * r), wts, EPS)),
        max_relative_error(gb, F.finite_diff_grad(lambda v: np.sum(F.dense_forward(x, wts, v) * r), b, EPS)),
    ]
    return max(errs)


def check_softmax_ce(rng, n=4, c=4) -> float:
    logits = rng.standard_normal((n, c))
    labels = rng.integers(0, c, size=n)
    _, grad = F.sparse_ce_loss(F.softmax(logits), labels)
    num = F.finite_diff_grad(lambda v: F.sparse_ce_loss(F.softmax(v), labels)[0], logits, EPS)
    return max_relative_error(grad, num)


CHECKS = {"conv2d": check_conv, "maxpool": check_maxpool, "relu": check_relu,
          "dense": check_dense, "softmax_ce": check_softmax_ce}
