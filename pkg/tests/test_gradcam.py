import numpy as np
import pytest

from ckdnet.errors import InputError, ShapeError
from ckdnet.gradcam import (
    Heatmap, colorize, colorize_overlay, explain, gradcam_map, normalize_minmax, upsample_bilinear,
)
from ckdnet.imgdata import decode_image, write_png
from ckdnet.nn import build_model
from ckdnet.nn.model import LAST_CONV_ACTIVATION


@pytest.fixture(scope="module")
def model():
    return build_model(seed=5)


@pytest.fixture(scope="module")
def image():
    return np.random.default_rng(3).random((28, 28, 3), dtype=np.float32)


def _reference_cam(model, image, class_id):
    """Grad-CAM recomputed by explicit per-layer chain rule in float64."""
    x = image[None].astype(np.float64)
    acts = []
    for layer in model.layers[:LAST_CONV_ACTIVATION + 1]:
        x, _ = layer.forward(x)
        acts.append(x)
    a = acts[-1]
    pooled, cache = model.layers[8].forward(a)
    w = model.layers[10].weights.astype(np.float64)[:, class_id]
    g_pooled = w.reshape(pooled.shape)
    g_a, _ = model.layers[8].backward(g_pooled, cache, True)
    alpha = g_a[0].mean(axis=(0, 1))
    return np.maximum(a[0] @ alpha, 0.0)


def test_map_shape_range_and_metadata(model, image):
    for c in range(4):
        hm = gradcam_map(model, image, c)
        assert hm.values.shape == (7, 7) and hm.class_id == c
        assert hm.layer == LAST_CONV_ACTIVATION
        assert hm.values.min() >= 0.0 and hm.values.max() <= 1.0
        assert hm.raw.min() >= 0.0
        if hm.raw.max() > 0:
            assert hm.values.max() == 1.0


def test_map_matches_reference(model, image):
    for c in range(4):
        hm = gradcam_map(model, image, c)
        np.testing.assert_allclose(hm.raw, _reference_cam(model, image, c), rtol=1e-5, atol=1e-7)


def test_map_deterministic(model, image):
    a, b = gradcam_map(model, image, 2), gradcam_map(model, image, 2)
    np.testing.assert_array_equal(a.values, b.values)


def test_scaling_class_weights_leaves_map_unchanged(image):
    m = build_model(seed=5)
    before = gradcam_map(m, image, 1).values
    dense = m.layers[10]
    dense.weights[:, 1] *= 2
    dense.bias[1] *= 2
    np.testing.assert_allclose(gradcam_map(m, image, 1).values, before, rtol=0, atol=1e-6)


def test_negative_weights_give_zero_map(image):
    m = build_model(seed=5)
    m.layers[10].weights[:, 0] = -np.abs(m.layers[10].weights[:, 0])
    hm = gradcam_map(m, image, 0)
    np.testing.assert_array_equal(hm.values, np.zeros((7, 7)))


def test_class_out_of_range(model, image):
    with pytest.raises(InputError):
        gradcam_map(model, image, 4)
    with pytest.raises(ShapeError):
        gradcam_map(model, image[:27], 0)


def test_normalize_minmax_cases():
    np.testing.assert_array_equal(normalize_minmax(np.zeros((3, 3))), np.zeros((3, 3)))
    np.testing.assert_array_equal(normalize_minmax(np.full((2, 2), 0.3)), np.ones((2, 2)))
    np.testing.assert_allclose(normalize_minmax(np.array([1.0, 2.0, 5.0])), [0, 0.25, 1])


def test_upsample_constant():
    up = upsample_bilinear(Heatmap(np.full((7, 7), 0.4), 0))
    assert up.values.shape == (28, 28)
    np.testing.assert_allclose(up.values, 0.4, atol=1e-15)


def test_upsample_hot_corner():
    v = np.zeros((7, 7))
    v[0, 0] = 1.0
    up = upsample_bilinear(Heatmap(v, 0)).values
    assert up[0, 0] == 1.0 and up[:2, :2].min() == 1.0  # clamped border region
    assert np.all(np.diff(up[0, 1:8]) <= 0) and np.all(np.diff(up[1:8, 0]) <= 0)
    assert up[0, 8:].max() == 0.0 and up[8:, 0].max() == 0.0


def test_upsample_stays_within_input_range(rng):
    v = rng.random((7, 7)) * 0.6 + 0.2
    up = upsample_bilinear(Heatmap(v, 0)).values
    assert up.min() >= v.min() and up.max() <= v.max()


def test_colormap_breakpoints():
    np.testing.assert_array_equal(colorize(np.array([0.0, 0.5, 1.0])),
                                  [[0, 0, 255], [0, 255, 0], [255, 0, 0]])
    np.testing.assert_allclose(colorize(np.array([0.25])), [[0, 127.5, 127.5]])


def test_overlay_examples():
    base = np.full((28, 28, 3), 255, np.uint8)
    hot = Heatmap(np.ones((28, 28)), 0)
    assert tuple(colorize_overlay(hot, base, 0.5)[0, 0]) == (255, 128, 128)
    assert tuple(colorize_overlay(hot, base, 1.0)[5, 5]) == (255, 0, 0)
    rng = np.random.default_rng(0)
    other = rng.integers(0, 256, (28, 28, 3)).astype(np.uint8)
    np.testing.assert_array_equal(colorize_overlay(Heatmap(np.zeros((28, 28)), 0), other, 0.0), other)


@pytest.mark.parametrize("alpha", [-0.1, 1.01])
def test_overlay_rejects_alpha(alpha):
    with pytest.raises(InputError):
        colorize_overlay(Heatmap(np.zeros((28, 28)), 0), np.zeros((28, 28, 3), np.uint8), alpha)


def test_explain_writes_png(model, image, tmp_path):
    heat, overlay = explain(model, image, 0)
    assert heat.values.shape == (28, 28) and overlay.dtype == np.uint8
    path = tmp_path / "x.gradcam.Cyst.png"
    write_png(overlay, path)
    raw = path.read_bytes()
    assert len(raw) > 0 and raw[:4] == bytes([0x89, 0x50, 0x4E, 0x47])
    np.testing.assert_array_equal(decode_image(raw), overlay)


def test_one_by_one_red_png(tmp_path):
    write_png(np.array([[[255, 0, 0]]], np.uint8), tmp_path / "r.png")
    assert tuple(decode_image((tmp_path / "r.png").read_bytes())[0, 0]) == (255, 0, 0)
