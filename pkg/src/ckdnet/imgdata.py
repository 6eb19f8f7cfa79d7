"""Image ingestion, preprocessing, deterministic splits and synthetic data.

An RGB image is a ``uint8`` array of shape ``[height, width, 3]`` in R,G,B
order. Model-ready images are ``float32`` arrays ``[28, 28, 3]`` in [0, 1].
"""
from __future__ import annotations

import io
import logging
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, DataError, DecodeError, FileError, LabelError, ShapeError

log = logging.getLogger(__name__)

CLASS_NAMES = ("Cyst", "Normal", "Stone", "Tumor")
SIDE = 28
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")
# reported composition of the public CT kidney dataset, by label
CT_KIDNEY_CLASS_COUNTS = (3709, 5077, 1377, 2283)


@dataclass(eq=False)
class LabeledSet:
    images: np.ndarray  # [n, 28, 28, 3] in [0, 1]
    labels: np.ndarray  # [n] ints in 0..3

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4 or self.images.shape[1:] != (SIDE, SIDE, 3):
            raise ShapeError(f"images must be [n,28,28,3], got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeError(f"{self.images.shape[0]} images but labels of shape {self.labels.shape}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(CLASS_NAMES)):
            raise LabelError("labels must lie in 0..3")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "LabeledSet":
        return LabeledSet(self.images[idx], self.labels[idx])

    def counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=len(CLASS_NAMES)).tolist()


@dataclass(eq=False)
class SyntheticSet(LabeledSet):
    # quadrant_masks[k] is True inside the quadrant holding class k's evidence
    quadrant_masks: np.ndarray = None


@dataclass(eq=False)
class SplitPair:
    train: LabeledSet
    held_out: LabeledSet
    train_idx: np.ndarray
    held_out_idx: np.ndarray
    seed: int
    fraction: float


# -- decoding / encoding ----------------------------------------------------

def decode_image(data: bytes, filename=None) -> np.ndarray:
    """Decode PNG or JPEG bytes to an RGB ``uint8`` array."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in ("PNG", "JPEG"):
                raise DecodeError(f"unsupported format {im.format}", filename)
            im.load()
            rgb = im.convert("RGB")
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}", filename) from exc
    return np.asarray(rgb, dtype=np.uint8).copy()


def encode_png(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ShapeError(f"expected uint8 [h,w,3], got {img.dtype} {img.shape}")
    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_png(img: np.ndarray, path) -> None:
    data = encode_png(img)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc}") from exc


# -- preprocessing ----------------------------------------------------------

def bgr_to_rgb(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img[..., ::-1])


def _axis_weights(n_in: int, n_out: int):
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a [h, w] or [h, w, c] array with pixel-centre alignment.

    Source coordinates are ``(dst + 0.5) * in / out - 0.5`` clamped to the
    border. Returns float64.
    """
    a = np.asarray(arr, dtype=np.float64)
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"cannot resize empty image {a.shape}")
    y0, y1, fy = _axis_weights(a.shape[0], out_h)
    x0, x1, fx = _axis_weights(a.shape[1], out_w)
    extra = (1,) * (a.ndim - 2)
    fy = fy.reshape(-1, 1, *extra)
    fx = fx.reshape(1, -1, *extra)
    top = a[y0][:, x0] * (1 - fx) + a[y0][:, x1] * fx
    bottom = a[y1][:, x0] * (1 - fx) + a[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5)


def resize_bilinear_28(img: np.ndarray) -> np.ndarray:
    out = resize_bilinear(img, SIDE, SIDE)
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def normalize_to_unit(img: np.ndarray) -> np.ndarray:
    if img.shape != (SIDE, SIDE, 3):
        raise ShapeError(f"expected a 28x28x3 image, got {img.shape}")
    return (np.asarray(img, dtype=np.float32) / np.float32(255.0))


def preprocess(img: np.ndarray, bgr_input: bool = False) -> np.ndarray:
    """Decoded image -> model-ready ``[28, 28, 3]`` float32."""
    if bgr_input:
        img = bgr_to_rgb(img)
    return normalize_to_unit(resize_bilinear_28(img))


def encode_label(class_name: str) -> int:
    folded = class_name.strip().casefold()
    for i, name in enumerate(CLASS_NAMES):
        if name.casefold() == folded:
            return i
    raise LabelError(f"unknown class {class_name!r}; expected one of {', '.join(CLASS_NAMES)}")


# -- directory datasets -----------------------------------------------------

def _class_dirs(root: Path) -> dict:
    found = {}
    for entry in sorted(os.listdir(root)):
        if (root / entry).is_dir():
            try:
                found[encode_label(entry)] = root / entry
            except LabelError:
                continue
    return found


def list_class_files(root) -> list[tuple[Path, int]]:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    dirs = _class_dirs(root)
    missing = [CLASS_NAMES[i] for i in range(len(CLASS_NAMES)) if i not in dirs]
    if missing:
        raise DataError(f"{root}: missing class directories: {', '.join(missing)}")
    files = []
    for label in range(len(CLASS_NAMES)):
        names = sorted(f for f in os.listdir(dirs[label])
                       if f.lower().endswith(IMAGE_EXTENSIONS))
        files.extend((dirs[label] / f, label) for f in names)
    return files


def load_directory_dataset(root, on_error: str = "abort", empty_class: str = "error",
                           bgr_input: bool = False) -> LabeledSet:
    """Load ``root/{Cyst,Normal,Stone,Tumor}/*.png|jpg|jpeg``.

    ``on_error`` is "abort" (raise after collecting every decode failure) or
    "skip" (warn and drop failed files). ``empty_class`` is "error" or "warn".
    """
    if on_error not in ("abort", "skip") or empty_class not in ("error", "warn"):
        raise ConfigError("on_error must be abort|skip and empty_class error|warn")
    files = list_class_files(root)
    images, labels, failures = [], [], []
    for path, label in files:
        try:
            img = decode_image(path.read_bytes(), filename=str(path))
        except DecodeError as exc:
            failures.append(exc)
            continue
        images.append(preprocess(img, bgr_input))
        labels.append(label)
    if failures:
        msg = f"{len(failures)} file(s) failed to decode: " + "; ".join(map(str, failures[:5]))
        if on_error == "abort":
            raise DataError(msg)
        warnings.warn(msg)
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=len(CLASS_NAMES))
    for i, c in enumerate(counts):
        if c == 0:
            msg = f"class {CLASS_NAMES[i]} has no images"
            if empty_class == "error":
                raise DataError(msg)
            warnings.warn(msg)
    stack = np.stack(images) if images else np.zeros((0, SIDE, SIDE, 3), np.float32)
    return LabeledSet(stack, np.asarray(labels, dtype=np.int64))


def write_dataset(data: LabeledSet, root) -> list[Path]:
    """Write a set to the class-per-directory layout as 8-bit PNGs."""
    root = Path(root)
    paths = []
    for name in CLASS_NAMES:
        (root / name).mkdir(parents=True, exist_ok=True)
    for i, (img, label) in enumerate(zip(data.images, data.labels)):
        path = root / CLASS_NAMES[label] / f"{i:05d}.png"
        pixels = np.clip(round_half_up(np.asarray(img, np.float64) * 255), 0, 255)
        write_png(pixels.astype(np.uint8), path)
        paths.append(path)
    return paths


# -- splits -----------------------------------------------------------------

def held_out_size(n: int, fraction: float) -> int:
    # round first so that e.g. 10 * 0.7 does not ceil to 8
    return math.ceil(round(n * fraction, 9))


def split_indices(n: int, fraction: float, seed: int):
    if not 0 < fraction < 1:
        raise ConfigError(f"split fraction must be in (0, 1), got {fraction}")
    if n < 2:
        raise DataError(f"need at least 2 samples to split, got {n}")
    k = held_out_size(n, fraction)
    if k >= n:
        raise ConfigError(f"fraction {fraction} leaves no training samples out of {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[k:], perm[:k]


def _split(data: LabeledSet, fraction: float, seed: int) -> SplitPair:
    train_idx, held_idx = split_indices(len(data), fraction, seed)
    return SplitPair(data.subset(train_idx), data.subset(held_idx), train_idx, held_idx,
                     seed, fraction)


def split_train_test(data: LabeledSet, test_fraction: float = 0.2, seed: int = 42) -> SplitPair:
    return _split(data, test_fraction, seed)


def split_train_val(data: LabeledSet, val_fraction: float = 0.1, seed: int = 42) -> SplitPair:
    return _split(data, val_fraction, seed)


# -- synthetic data ---------------------------------------------------------

def quadrant_masks(side: int = SIDE) -> np.ndarray:
    """Boolean masks [4, side, side]; class k owns quadrant k
    (0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right)."""
    half = side // 2
    masks = np.zeros((len(CLASS_NAMES), side, side), dtype=bool)
    for k in range(len(CLASS_NAMES)):
        r, c = divmod(k, 2)
        masks[k, r * half:(r + 1) * half, c * half:(c + 1) * half] = True
    return masks


# unit vectors spanning the chroma plane (orthogonal to grey)
_CHROMA_BASIS = np.array([[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]]) / np.array([[2 ** 0.5], [6 ** 0.5]])


def class_tints(chroma: float = 0.5) -> np.ndarray:
    """[4, 3] RGB tints with channel mean 0.5, hues 90 degrees apart."""
    angles = np.arange(len(CLASS_NAMES)) * (np.pi / 2)
    return 0.5 + chroma * np.stack([np.cos(angles), np.sin(angles)], axis=1) @ _CHROMA_BASIS


def generate_synthetic_dataset(per_class_counts, seed: int = 42) -> SyntheticSet:
    """Noisy grey images with one disc per quadrant; class k tints the disc in quadrant k.

    The other three discs are neutral grey with the same per-pixel
    luminance, so only the hue in quadrant k tells the classes apart. Disc
    sizes vary, and an image is redrawn until its class quadrant is
    brighter on average than the rest. Pixel values are multiples of
    1/255, so the set survives a round trip through 8-bit PNG unchanged.
    """
    counts = [int(c) for c in per_class_counts]
    if len(counts) != len(CLASS_NAMES) or any(c < 0 for c in counts):
        raise ConfigError(f"need four non-negative class counts, got {per_class_counts}")
    if sum(counts) == 0:
        raise DataError("all class counts are zero")
    rng = np.random.default_rng(seed)
    masks = quadrant_masks()
    tints = class_tints()
    neutral = np.full(3, 0.5)
    yy, xx = np.mgrid[0:SIDE, 0:SIDE].astype(np.float64)
    half = SIDE // 2
    labels = np.repeat(np.arange(len(CLASS_NAMES)), counts)
    images = np.empty((len(labels), SIDE, SIDE, 3), dtype=np.float32)
    for i, k in enumerate(labels):
        while True:
            radii = rng.uniform(2.5, 4.5, size=4)
            radii[k] = rng.uniform(3.5, 4.5)
            img = 0.25 + 0.05 * rng.standard_normal((SIDE, SIDE, 3))
            amp = rng.uniform(0.45, 0.65)
            for q in range(len(CLASS_NAMES)):
                r, c = divmod(q, 2)
                cy = r * half + 6.5 + rng.uniform(-1.5, 1.5)
                cx = c * half + 6.5 + rng.uniform(-1.5, 1.5)
                disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= radii[q] ** 2
                img[disc] += amp * (tints[k] if q == k else neutral)
            img = round_half_up(np.clip(img, 0.0, 1.0) * 255) / 255.0
            if img[masks[k]].mean() > img[~masks[k]].mean():
                break
        assert img[masks[k]].mean() > img[~masks[k]].mean()
        images[i] = img
    return SyntheticSet(images, labels, quadrant_masks=masks)
