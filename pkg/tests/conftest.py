"""Shared fixtures: synthetic image tensors and an on-disk PNG corpus with
a distinct color/texture signature per class."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from giclassify.dataset import CLASS_NAMES
from giclassify.imaging import RGB, ImageTensor


def rgb_image(array: np.ndarray) -> ImageTensor:
    """(h, w, 3) or (3, h, w) float array in [0, 1] -> RGB ImageTensor."""
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 3:
        arr = arr.transpose(2, 0, 1)
    return ImageTensor(RGB, np.ascontiguousarray(arr))


def solid(r: float, g: float, b: float, size: int = 64) -> ImageTensor:
    planes = np.empty((3, size, size))
    planes[0], planes[1], planes[2] = r, g, b
    return ImageTensor(RGB, planes)


def vertical_stripes(size: int = 64, period: int = 8,
                     low: float = 0.0, high: float = 1.0) -> ImageTensor:
    col = (np.arange(size) % period) < (period // 2)
    plane = np.where(col[np.newaxis, :], high, low)
    return ImageTensor(RGB, np.broadcast_to(plane, (3, size, size)).copy())


def checkerboard(size: int = 64, cell: int = 4) -> ImageTensor:
    ys, xs = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    plane = (((ys // cell) + (xs // cell)) % 2).astype(np.float64)
    return ImageTensor(RGB, np.broadcast_to(plane, (3, size, size)).copy())


def diagonal_step(size: int = 64) -> ImageTensor:
    ys, xs = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    plane = (xs + ys >= size).astype(np.float64)
    return ImageTensor(RGB, np.broadcast_to(plane, (3, size, size)).copy())


def png_bytes(img: ImageTensor) -> bytes:
    arr = np.clip(img.planes * 255.0 + 0.5, 0, 255).astype(np.uint8)
    pil = Image.fromarray(arr.transpose(1, 2, 0), "RGB")
    out = io.BytesIO()
    pil.save(out, "PNG")
    return out.getvalue()


def class_image(class_idx: int, rng: np.random.Generator,
                size: int = 96) -> np.ndarray:
    """uint8 (size, size, 3) image with a class-specific hue and pattern."""
    import colorsys

    hue = (class_idx / 16.0 + rng.normal(0.0, 0.008)) % 1.0
    base = np.array(colorsys.hsv_to_rgb(hue, 0.85, 0.9))
    other = np.array(colorsys.hsv_to_rgb((hue + 0.5) % 1.0, 0.6, 0.5))
    pattern = class_idx % 4
    period = 6 + 4 * (class_idx // 4)
    ys, xs = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    if pattern == 0:
        mask = np.zeros((size, size), dtype=bool)
    elif pattern == 1:
        mask = (xs % period) < (period // 2)
    elif pattern == 2:
        mask = (ys % period) < (period // 2)
    else:
        mask = ((ys // (period // 2)) + (xs // (period // 2))) % 2 == 0
    img = np.where(mask[..., np.newaxis], other, base)
    img = img + rng.normal(0.0, 0.03, size=img.shape)
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def build_corpus(root: Path, per_class: int = 10, size: int = 96,
                 seed: int = 7, classes=CLASS_NAMES) -> Path:
    """Write a class-folder PNG corpus under `root` deterministically."""
    rng = np.random.default_rng(seed)
    for idx, name in enumerate(classes):
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            arr = class_image(idx, rng, size)
            Image.fromarray(arr, "RGB").save(class_dir / f"img{i:03d}.png")
    return root


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    return build_corpus(root, per_class=4, size=64)
