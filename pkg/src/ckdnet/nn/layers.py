"""Layer objects.

Layers hold parameters only. ``forward`` returns the output together with
whatever the matching ``backward`` needs, so a model can run several
forward passes concurrently without sharing mutable state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from . import functional as F


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


@dataclass(eq=False)
class ConvLayer:
    kernels: np.ndarray  # [3, 3, cin, cout]
    bias: np.ndarray  # [cout]

    kind = "conv"

    def __post_init__(self):
        if self.kernels.ndim != 4 or self.kernels.shape[:2] != (3, 3):
            raise ShapeError(f"conv kernels must be [3,3,cin,cout], got {self.kernels.shape}")
        if self.bias.shape != (self.kernels.shape[3],):
            raise ShapeError(f"bias {self.bias.shape} does not match kernels {self.kernels.shape}")

    @classmethod
    def init(cls, rng, in_channels: int, out_channels: int, dtype=np.float32):
        kernels = glorot_uniform(rng, (3, 3, in_channels, out_channels),
                                 9 * in_channels, 9 * out_channels, dtype)
        return cls(kernels, np.zeros(out_channels, dtype=dtype))

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[2]

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[3]

    @property
    def params(self):
        return [self.kernels, self.bias]

    def output_shape(self, shape):
        return (*shape[:-1], self.out_channels)

    def forward(self, x):
        return F.conv2d_forward(x, self.kernels, self.bias), x

    def backward(self, grad, cache, need_input_grad=True):
        gi, gk, gb = F.conv2d_backward(grad, cache, self.kernels, need_input_grad)
        return gi, [gk, gb]


@dataclass(eq=False)
class DenseLayer:
    weights: np.ndarray  # [fan_in, fan_out]
    bias: np.ndarray  # [fan_out]

    kind = "dense"

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ShapeError(f"bad dense shapes {self.weights.shape}, {self.bias.shape}")

    @classmethod
    def init(cls, rng, fan_in: int, fan_out: int, dtype=np.float32):
        weights = glorot_uniform(rng, (fan_in, fan_out), fan_in, fan_out, dtype)
        return cls(weights, np.zeros(fan_out, dtype=dtype))

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]

    @property
    def params(self):
        return [self.weights, self.bias]

    def output_shape(self, shape):
        if shape[-1] != self.fan_in:
            raise ShapeError(f"dense layer expects {self.fan_in} features, got {shape[-1]}")
        return (*shape[:-1], self.fan_out)

    def forward(self, x):
        return F.dense_forward(x, self.weights, self.bias), x

    def backward(self, grad, cache, need_input_grad=True):
        gi, gw, gb = F.dense_backward(grad, cache, self.weights)
        return gi, [gw, gb]


class _Stateless:
    params: list = []

    def output_shape(self, shape):
        return shape

    def __repr__(self):
        return f"{type(self).__name__}()"


class ReLU(_Stateless):
    kind = "relu"

    def forward(self, x):
        return F.relu(x), x

    def backward(self, grad, cache, need_input_grad=True):
        return F.relu_backward(grad, cache), []


class MaxPool2x2(_Stateless):
    kind = "maxpool"

    def output_shape(self, shape):
        n, h, w, c = shape
        return (n, h // 2, w // 2, c)

    def forward(self, x):
        out, pos = F.maxpool2x2_forward(x)
        return out, (pos, x.shape)

    def backward(self, grad, cache, need_input_grad=True):
        pos, shape = cache
        return F.maxpool2x2_backward(grad, pos, shape), []


class Flatten(_Stateless):
    kind = "flatten"

    def output_shape(self, shape):
        return (shape[0], int(np.prod(shape[1:])))

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, grad, cache, need_input_grad=True):
        return grad.reshape(cache), []


class Softmax(_Stateless):
    """Terminal activation. Training fuses it into the loss, so the model's
    forward pass stops at the logits and only inference applies it."""

    kind = "softmax"

    def forward(self, x):
        return F.softmax(x), None

    def backward(self, grad, cache, need_input_grad=True):
        raise NotImplementedError("softmax is fused into sparse_ce_loss")
