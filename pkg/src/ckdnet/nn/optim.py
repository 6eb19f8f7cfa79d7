"""Adam with bias-corrected moments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError

DEFAULT_LR = 0.001
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass(eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(param), np.zeros_like(param), 0)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState,
              lr: float = DEFAULT_LR, beta1: float = DEFAULT_BETA1,
              beta2: float = DEFAULT_BETA2, epsilon: float = DEFAULT_EPSILON):
    """Apply one Adam update to ``param`` in place and return ``(param, state)``.

    The stabiliser sits under the square root: ``lr * m_hat / sqrt(v_hat + eps)``.
    """
    if param.shape != grad.shape or state.m.shape != param.shape:
        raise ShapeError(f"adam shapes differ: param {param.shape}, grad {grad.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient passed to adam_step")
    state.t += 1
    state.m *= beta1
    state.m += (1 - beta1) * grad
    state.v *= beta2
    state.v += (1 - beta2) * (grad * grad)
    m_hat = state.m / (1 - beta1 ** state.t)
    v_hat = state.v / (1 - beta2 ** state.t)
    param -= (lr * m_hat / np.sqrt(v_hat + epsilon)).astype(param.dtype, copy=False)
    return param, state
