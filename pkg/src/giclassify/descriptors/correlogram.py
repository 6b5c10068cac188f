"""Auto color correlogram over a 64-color HSV quantization.

For each color c and each L-infinity distance d in {1..4}, the descriptor
holds the probability that a pixel on the ring exactly d away from a pixel
of color c also has color c. Ring positions falling outside the image are
excluded from the denominator; colors that never occur yield zeros.
"""

from __future__ import annotations

import numpy as np

from ..imaging import HSV, RGB, ImageTensor, convert

H_BINS, S_BINS, V_BINS = 8, 4, 2
N_COLORS = H_BINS * S_BINS * V_BINS
DISTANCES = (1, 2, 3, 4)


def quantize_hsv(img: ImageTensor) -> np.ndarray:
    """Map every pixel to one of 64 color indices (8 H x 4 S x 2 V)."""
    hsv = convert(img, HSV) if img.colorspace == RGB else img
    if hsv.colorspace != HSV:
        raise ValueError("quantize_hsv needs an RGB or HSV image")
    h, s, v = hsv.planes
    hq = np.minimum((h / 360.0 * H_BINS).astype(np.int64), H_BINS - 1)
    sq = np.minimum((s * S_BINS).astype(np.int64), S_BINS - 1)
    vq = np.minimum((v * V_BINS).astype(np.int64), V_BINS - 1)
    return hq * (S_BINS * V_BINS) + sq * V_BINS + vq


def _ring_offsets(d: int) -> list[tuple[int, int]]:
    offsets = []
    for dy in range(-d, d + 1):
        for dx in range(-d, d + 1):
            if max(abs(dy), abs(dx)) == d:
                offsets.append((dy, dx))
    return offsets


def _in_bounds_ring_counts(h: int, w: int, d: int) -> np.ndarray:
    """Per-pixel count of ring-d offsets landing inside the image."""

    def box(k: int) -> np.ndarray:
        if k < 0:
            return np.zeros((h, w), dtype=np.int64)
        ys = np.arange(h)
        xs = np.arange(w)
        rows = np.minimum(ys, k) + np.minimum(h - 1 - ys, k) + 1
        cols = np.minimum(xs, k) + np.minimum(w - 1 - xs, k) + 1
        return rows[:, None] * cols[None, :]

    return box(d) - box(d - 1)


def auto_color_correlogram(img: ImageTensor) -> np.ndarray:
    """256 values laid out color-major: [c0 d1..d4, c1 d1..d4, ...]."""
    quantized = quantize_hsv(img)
    h, w = quantized.shape
    out = np.zeros(N_COLORS * len(DISTANCES))
    flat = quantized.ravel()
    for di, d in enumerate(DISTANCES):
        total = np.bincount(flat, weights=_in_bounds_ring_counts(h, w, d).ravel(),
                            minlength=N_COLORS)
        same = np.zeros(N_COLORS, dtype=np.int64)
        # Same-color pair counts are symmetric in the offset, so scan half
        # the ring and count each ordered pair twice.
        for dy, dx in _ring_offsets(d):
            if dy < 0 or (dy == 0 and dx < 0):
                continue
            y0, y1 = max(0, -dy), min(h, h - dy)
            x0, x1 = max(0, -dx), min(w, w - dx)
            if y0 >= y1 or x0 >= x1:
                continue
            center = quantized[y0:y1, x0:x1]
            neighbor = quantized[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
            matches = center[center == neighbor]
            same += 2 * np.bincount(matches, minlength=N_COLORS)
        nz = total > 0
        values = np.zeros(N_COLORS)
        values[nz] = same[nz] / total[nz]
        out[di::len(DISTANCES)] = values
    return out
