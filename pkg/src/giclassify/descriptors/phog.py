"""Pyramid histogram of oriented gradients: Sobel orientations in [0, 360)
weighted by magnitude, 8 bins, pyramid levels 0..2 (21 cells, 168 values),
globally normalized to sum 1 (zero vector for gradient-free images)."""

from __future__ import annotations

import numpy as np

from ..imaging import ImageTensor, gray_plane

N_BINS = 8
LEVELS = (0, 1, 2)
MIN_SIZE = 4
N_VALUES = sum(4 ** level for level in LEVELS) * N_BINS


def sobel(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel responses on the interior grid (rows/cols 1..n-2).

    Terms are paired as differences so constant inputs give exact zeros.
    """
    g = gray
    gx = ((g[:-2, 2:] - g[:-2, :-2])
          + 2.0 * (g[1:-1, 2:] - g[1:-1, :-2])
          + (g[2:, 2:] - g[2:, :-2]))
    gy = ((g[2:, :-2] - g[:-2, :-2])
          + 2.0 * (g[2:, 1:-1] - g[:-2, 1:-1])
          + (g[2:, 2:] - g[:-2, 2:]))
    return gx, gy


def phog(img: ImageTensor) -> np.ndarray:
    gray = gray_plane(img)
    h, w = gray.shape
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ValueError(f"phog needs at least {MIN_SIZE}x{MIN_SIZE} pixels, "
                         f"got {w}x{h}")
    gx, gy = sobel(gray)
    magnitude = np.hypot(gx, gy)
    theta = np.mod(np.degrees(np.arctan2(gy, gx)), 360.0)
    bins = np.minimum((theta / (360.0 / N_BINS)).astype(np.int64), N_BINS - 1)
    # Interior pixel coordinates in full-image terms.
    ys = np.arange(1, h - 1)
    xs = np.arange(1, w - 1)
    out = np.empty(N_VALUES)
    pos = 0
    flat_mag = magnitude.ravel()
    flat_bins = bins.ravel()
    for level in LEVELS:
        grid = 2 ** level
        cell_r = (ys * grid) // h
        cell_c = (xs * grid) // w
        cell = (cell_r[:, None] * grid + cell_c[None, :]).ravel()
        composite = cell * N_BINS + flat_bins
        hist = np.bincount(composite, weights=flat_mag,
                           minlength=grid * grid * N_BINS)
        out[pos:pos + hist.size] = hist
        pos += hist.size
    total = out.sum()
    if total > 0:
        out /= total
    return out
