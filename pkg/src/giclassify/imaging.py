"""Image decoding, color-space conversion, and geometric augmentation.

Images are carried as ``ImageTensor``: a (channels, height, width) float64
array plus a colorspace tag. RGB and Gray planes live in [0, 1]; HSV keeps
H in [0, 360) with S, V in [0, 1]; YCbCr is BT.601 full-range with Cb/Cr
centered at 0.5.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

RGB = "rgb"
GRAY = "gray"
HSV = "hsv"
YCBCR = "ycbcr"

_CHANNELS = {RGB: 3, GRAY: 1, HSV: 3, YCBCR: 3}


class DecodeError(ValueError):
    """Raised when an image byte stream cannot be decoded."""


@dataclass(frozen=True)
class ImageTensor:
    colorspace: str
    planes: np.ndarray  # (channels, height, width) float64

    def __post_init__(self):
        if self.colorspace not in _CHANNELS:
            raise ValueError(f"unknown colorspace {self.colorspace!r}")
        if self.planes.ndim != 3 or self.planes.shape[0] != _CHANNELS[self.colorspace]:
            raise ValueError(
                f"{self.colorspace} tensor needs shape ({_CHANNELS[self.colorspace]}, h, w), "
                f"got {self.planes.shape}")

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


@dataclass(frozen=True)
class AugmentSpec:
    flip_h: bool = False
    flip_v: bool = False
    rotate_deg: float = 0.0
    resize_to: tuple[int, int] | None = None  # (width, height)

    def __post_init__(self):
        if not 0.0 <= self.rotate_deg < 360.0:
            raise ValueError(f"rotate_deg must be in [0, 360), got {self.rotate_deg}")


def decode(data: bytes) -> ImageTensor:
    """Decode a JPEG or PNG byte stream into an RGB ImageTensor (v / 255)."""
    stream = io.BytesIO(data)
    try:
        with Image.open(stream) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(
            f"cannot decode image stream at byte offset {stream.tell()} "
            f"of {len(data)}: {exc}") from exc
    return ImageTensor(RGB, np.ascontiguousarray(arr.transpose(2, 0, 1)))


def decode_file(path) -> ImageTensor:
    with open(path, "rb") as fh:
        return decode(fh.read())


def to_png_bytes(img: ImageTensor) -> bytes:
    """Encode an RGB or Gray tensor as PNG (debug dumps)."""
    if img.colorspace == RGB:
        arr = np.clip(img.planes * 255.0 + 0.5, 0, 255).astype(np.uint8).transpose(1, 2, 0)
        pil = Image.fromarray(arr, "RGB")
    elif img.colorspace == GRAY:
        arr = np.clip(img.planes[0] * 255.0 + 0.5, 0, 255).astype(np.uint8)
        pil = Image.fromarray(arr, "L")
    else:
        raise ValueError(f"cannot encode colorspace {img.colorspace!r}")
    out = io.BytesIO()
    pil.save(out, "PNG")
    return out.getvalue()


def convert(img: ImageTensor, target: str) -> ImageTensor:
    """Convert an RGB image to gray, HSV, or BT.601 full-range YCbCr."""
    if img.colorspace != RGB:
        raise ValueError(f"convert expects an RGB source, got {img.colorspace!r}")
    if target == RGB:
        return ImageTensor(RGB, img.planes.copy())
    r, g, b = img.planes
    if target == GRAY:
        gray = 0.299 * r + 0.587 * g + 0.114 * b
        return ImageTensor(GRAY, gray[np.newaxis])
    if target == YCBCR:
        y = 0.299 * r + 0.587 * g + 0.114 * b
        cb = (b - y) / 1.772 + 0.5
        cr = (r - y) / 1.402 + 0.5
        return ImageTensor(YCBCR, np.stack([y, cb, cr]))
    if target == HSV:
        maxc = np.maximum(np.maximum(r, g), b)
        minc = np.minimum(np.minimum(r, g), b)
        delta = maxc - minc
        v = maxc
        s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
        d = np.where(delta > 0, delta, 1.0)
        h = np.where(maxc == r, np.mod((g - b) / d, 6.0),
                     np.where(maxc == g, (b - r) / d + 2.0,
                              (r - g) / d + 4.0))
        h = np.where(delta > 0, np.mod(h * 60.0, 360.0), 0.0)
        return ImageTensor(HSV, np.stack([h, s, v]))
    raise ValueError(f"unsupported conversion rgb -> {target!r}")


def gray_plane(img: ImageTensor) -> np.ndarray:
    """2-D gray plane of any RGB or Gray tensor."""
    if img.colorspace == GRAY:
        return img.planes[0]
    return convert(img, GRAY).planes[0]


def flip_h(img: ImageTensor) -> ImageTensor:
    return ImageTensor(img.colorspace, img.planes[:, :, ::-1].copy())


def flip_v(img: ImageTensor) -> ImageTensor:
    return ImageTensor(img.colorspace, img.planes[:, ::-1, :].copy())


def rotate(img: ImageTensor, degrees: float) -> ImageTensor:
    """Counterclockwise rotation about the image center.

    Exact multiples of 90 use lossless array rotation (dimensions swap for
    90/270). Other angles sample nearest-neighbor with black fill and keep
    the input dimensions.
    """
    degrees = float(degrees) % 360.0
    if degrees == 0.0:
        return ImageTensor(img.colorspace, img.planes.copy())
    if degrees % 90.0 == 0.0:
        k = int(degrees // 90.0)
        return ImageTensor(img.colorspace, np.rot90(img.planes, k=k, axes=(1, 2)).copy())
    h, w = img.height, img.width
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = np.deg2rad(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    # Inverse map: rotate output coordinates clockwise back into the source.
    dx, dy = xx - cx, yy - cy
    src_x = np.rint(cos_t * dx - sin_t * dy + cx).astype(np.int64)
    src_y = np.rint(sin_t * dx + cos_t * dy + cy).astype(np.int64)
    inside = (src_x >= 0) & (src_x < w) & (src_y >= 0) & (src_y < h)
    out = np.zeros_like(img.planes)
    sy = np.clip(src_y, 0, h - 1)
    sx = np.clip(src_x, 0, w - 1)
    for c in range(img.planes.shape[0]):
        sampled = img.planes[c][sy, sx]
        out[c] = np.where(inside, sampled, 0.0)
    return ImageTensor(img.colorspace, out)


def resize(img: ImageTensor, width: int, height: int) -> ImageTensor:
    """Bilinear resize with half-pixel-centered sampling."""
    if width <= 0 or height <= 0:
        raise ValueError(f"resize target must be positive, got {width}x{height}")
    h, w = img.height, img.width
    if (w, h) == (width, height):
        return ImageTensor(img.colorspace, img.planes.copy())
    src_x = (np.arange(width) + 0.5) * (w / width) - 0.5
    src_y = (np.arange(height) + 0.5) * (h / height) - 0.5
    x0 = np.clip(np.floor(src_x), 0, w - 1).astype(np.int64)
    y0 = np.clip(np.floor(src_y), 0, h - 1).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(src_x - x0, 0.0, 1.0)
    fy = np.clip(src_y - y0, 0.0, 1.0)
    out = np.empty((img.planes.shape[0], height, width))
    wy0, wy1 = (1 - fy)[:, None], fy[:, None]
    wx0, wx1 = (1 - fx)[None, :], fx[None, :]
    for c in range(img.planes.shape[0]):
        p = img.planes[c]
        top = p[np.ix_(y0, x0)] * wx0 + p[np.ix_(y0, x1)] * wx1
        bot = p[np.ix_(y1, x0)] * wx0 + p[np.ix_(y1, x1)] * wx1
        out[c] = top * wy0 + bot * wy1
    return ImageTensor(img.colorspace, out)


def augment(img: ImageTensor, spec: AugmentSpec) -> ImageTensor:
    """Apply flips, rotation, and resize in that fixed order."""
    out = img
    if spec.flip_h:
        out = flip_h(out)
    if spec.flip_v:
        out = flip_v(out)
    if spec.rotate_deg:
        out = rotate(out, spec.rotate_deg)
    if spec.resize_to is not None:
        out = resize(out, spec.resize_to[0], spec.resize_to[1])
    return out
