"""The classifier: three conv/ReLU/pool stages, flatten, 4-way dense + softmax."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import functional as F
from .layers import ConvLayer, DenseLayer, Flatten, MaxPool2x2, ReLU, Softmax
from .optim import AdamState

INPUT_SHAPE = (28, 28, 3)
CONV_WIDTHS = (28, 64, 128)
NUM_CLASSES = 4
# index of the ReLU that follows the last convolution (Grad-CAM target)
LAST_CONV_ACTIVATION = 7


class Model:
    """Ordered layer stack plus one :class:`AdamState` per parameter array."""

    def __init__(self, layers, adam_states=None):
        self.layers = list(layers)
        self.adam_states = adam_states or [AdamState.zeros_like(p) for p in self.params()]

    def params(self) -> list:
        return [p for layer in self.layers for p in layer.params]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    @property
    def dtype(self):
        return self.params()[0].dtype

    def activation_shapes(self, input_shape=(1, *INPUT_SHAPE)) -> list:
        shapes, shape = [], tuple(input_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
            shapes.append(shape)
        return shapes

    def logit_layers(self):
        if isinstance(self.layers[-1], Softmax):
            return self.layers[:-1]
        return self.layers

    def forward(self, x: np.ndarray, keep_cache: bool = False):
        """Run up to the logits. Returns ``(logits, caches)``; ``caches`` is
        ``None`` unless ``keep_cache``. Each cache entry is
        ``(layer_output, backward_cache)``."""
        if x.ndim != 4 or x.shape[1:] != INPUT_SHAPE:
            raise ShapeError(f"expected images [n,28,28,3], got {x.shape}")
        x = x.astype(self.dtype, copy=False)
        caches = [] if keep_cache else None
        for layer in self.logit_layers():
            x, cache = layer.forward(x)
            if keep_cache:
                caches.append((x, cache))
        return x, caches

    def backward(self, caches, grad_logits: np.ndarray, stop: int = 0):
        """Backpropagate from the logits down to the input of layer ``stop``.

        Returns ``(grad_at_stop_input, param_grads)``; ``param_grads`` follows
        the order of :meth:`params` for layers at index >= ``stop``.
        """
        layers = self.logit_layers()
        grad = grad_logits
        grads_rev = []
        for i in range(len(layers) - 1, stop - 1, -1):
            need = i > 0
            grad, pgrads = layers[i].backward(grad, caches[i][1], need_input_grad=need)
            grads_rev.append(pgrads)
        param_grads = [g for pg in reversed(grads_rev) for g in pg]
        return grad, param_grads


def build_model(seed: int = 42, dtype=np.float32) -> Model:
    """Glorot-uniform kernels, zero biases, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    layers, cin = [], INPUT_SHAPE[2]
    for width in CONV_WIDTHS:
        layers += [ConvLayer.init(rng, cin, width, dtype), ReLU(), MaxPool2x2()]
        cin = width
    side = INPUT_SHAPE[0]
    for _ in CONV_WIDTHS:
        side //= 2
    layers += [Flatten(), DenseLayer.init(rng, side * side * cin, NUM_CLASSES, dtype), Softmax()]
    return Model(layers)


# name used by the published interface
build_paper_model = build_model


def predict_proba(model: Model, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    if images.ndim != 4 or images.shape[1:] != INPUT_SHAPE:
        raise ShapeError(f"expected images [n,28,28,3], got {images.shape}")
    out = np.empty((images.shape[0], NUM_CLASSES), dtype=model.dtype)
    for start in range(0, images.shape[0], batch_size):
        logits, _ = model.forward(images[start:start + batch_size])
        out[start:start + batch_size] = F.softmax(logits)
    return out
