"""Grad-CAM heatmaps from the last convolution, plus colour overlays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ShapeError
from .imgdata import SIDE, resize_bilinear, round_half_up, write_png  # noqa: F401
from .nn.model import LAST_CONV_ACTIVATION, NUM_CLASSES, Model

DEFAULT_ALPHA = 0.4
# heat -> RGB breakpoints: blue at 0, green at 0.5, red at 1
COLORMAP_STOPS = np.array([0.0, 0.5, 1.0])
COLORMAP_RGB = np.array([[0, 0, 255], [0, 255, 0], [255, 0, 0]], dtype=np.float64)


@dataclass
class Heatmap:
    values: np.ndarray
    class_id: int
    layer: int = LAST_CONV_ACTIVATION
    raw: np.ndarray | None = None  # un-normalised map, same grid as ``values``


def normalize_minmax(raw: np.ndarray) -> np.ndarray:
    hi, lo = raw.max(), raw.min()
    if hi <= 0:
        return np.zeros_like(raw)
    if hi == lo:
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


def gradcam_map(model: Model, image: np.ndarray, class_id: int) -> Heatmap:
    """7x7 class heatmap for one ``[28, 28, 3]`` image.

    Gradients of the class logit with respect to the last conv activation
    are averaged per channel; the weighted channel sum is rectified and
    min-max normalised.
    """
    if not 0 <= class_id < NUM_CLASSES:
        raise InputError(f"class_id must be in 0..{NUM_CLASSES - 1}, got {class_id}")
    if image.shape != (SIDE, SIDE, 3):
        raise ShapeError(f"expected one [28,28,3] image, got {image.shape}")
    logits, caches = model.forward(image[None], keep_cache=True)
    grad = np.zeros_like(logits)
    grad[0, class_id] = 1.0
    d_act, _ = model.backward(caches, grad, stop=LAST_CONV_ACTIVATION + 1)
    act = caches[LAST_CONV_ACTIVATION][0][0].astype(np.float64)
    weights = d_act[0].astype(np.float64).mean(axis=(0, 1))
    raw = np.maximum(act @ weights, 0.0)
    return Heatmap(normalize_minmax(raw), class_id, raw=raw)


def upsample_bilinear(heatmap: Heatmap, size: int = SIDE) -> Heatmap:
    values = np.clip(resize_bilinear(heatmap.values, size, size), 0.0, 1.0)
    return Heatmap(values, heatmap.class_id, heatmap.layer)


def colorize(values: np.ndarray) -> np.ndarray:
    """Map heat in [0, 1] to float RGB through the piecewise-linear colormap."""
    v = np.clip(values, 0.0, 1.0)
    return np.stack([np.interp(v, COLORMAP_STOPS, COLORMAP_RGB[:, ch]) for ch in range(3)],
                    axis=-1)


def colorize_overlay(heatmap: Heatmap, base: np.ndarray, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Blend ``(1 - alpha) * base + alpha * colour`` and round half up to uint8."""
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must be in [0, 1], got {alpha}")
    if base.shape != (*heatmap.values.shape, 3):
        raise ShapeError(f"base {base.shape} does not match heatmap {heatmap.values.shape}")
    out = (1 - alpha) * base.astype(np.float64) + alpha * colorize(heatmap.values)
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def explain(model: Model, image: np.ndarray, class_id: int, alpha: float = DEFAULT_ALPHA):
    """Heatmap at input resolution and its overlay on the (8-bit) input."""
    heat = upsample_bilinear(gradcam_map(model, image, class_id))
    base = np.clip(round_half_up(image.astype(np.float64) * 255), 0, 255).astype(np.uint8)
    return heat, colorize_overlay(heat, base, alpha)
