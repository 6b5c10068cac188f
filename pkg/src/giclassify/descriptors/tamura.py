"""Tamura texture features: coarseness, contrast, and a 16-bin
directionality histogram (18 values total).

Coarseness follows the classic best-scale construction: neighborhood
averages over 2^k windows for k=1..5, per-pixel directional differences,
and the mean of 2^k at the winning scale. Windows and difference offsets
are replicate-clamped at the borders so every pixel participates.
"""

from __future__ import annotations

import numpy as np

from ..imaging import ImageTensor, gray_plane

N_SCALES = 5
MIN_SIZE = 32
DIRECTIONALITY_BINS = 16
MAGNITUDE_THRESHOLD = 0.01
# Directional differences below this are treated as zero; integral-image
# cancellation otherwise leaves ~1e-10 noise on flat regions.
DIFF_EPSILON = 1e-9


def _box_mean(gray: np.ndarray, k: int) -> np.ndarray:
    """Mean over the 2^k x 2^k window anchored at (y - 2^(k-1), x - 2^(k-1)),
    replicate-padded, evaluated at every pixel."""
    size = 1 << k
    half = size >> 1
    padded = np.pad(gray, half, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    np.cumsum(padded, axis=0, out=integral[1:, 1:])
    np.cumsum(integral[1:, 1:], axis=1, out=integral[1:, 1:])
    h, w = gray.shape
    s = integral
    total = (s[size:size + h, size:size + w]
             - s[:h, size:size + w]
             - s[size:size + h, :w]
             + s[:h, :w])
    return total / float(size * size)


def coarseness(gray: np.ndarray) -> float:
    """Mean of 2^k over the per-pixel best scale k.

    Differences are quantized to DIFF_EPSILON before the argmax and ties go
    to the largest scale (textures tied across window sizes read as coarse);
    pixels with no directional difference at any scale default to the
    smallest scale.
    """
    h, w = gray.shape
    ys = np.arange(h)
    xs = np.arange(w)
    quantized = np.empty((N_SCALES, h, w), dtype=np.int64)
    for k in range(1, N_SCALES + 1):
        half = 1 << (k - 1)
        avg = _box_mean(gray, k)
        xl = np.clip(xs - half, 0, w - 1)
        xr = np.clip(xs + half, 0, w - 1)
        yu = np.clip(ys - half, 0, h - 1)
        yd = np.clip(ys + half, 0, h - 1)
        e_h = np.abs(avg[:, xr] - avg[:, xl])
        e_v = np.abs(avg[yd, :] - avg[yu, :])
        quantized[k - 1] = np.rint(np.maximum(e_h, e_v) / DIFF_EPSILON)
    best_k = N_SCALES - quantized[::-1].argmax(axis=0)
    best_k[quantized.max(axis=0) == 0] = 1
    return float(np.exp2(best_k).mean())


def contrast(gray: np.ndarray) -> float:
    mu = gray.mean()
    centered = gray - mu
    var = np.mean(centered * centered)
    if var == 0.0:
        return 0.0
    mu4 = np.mean(centered ** 4)
    alpha4 = mu4 / (var * var)
    return float(np.sqrt(var) / alpha4 ** 0.25)


def _prewitt(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prewitt responses on the interior grid (no padding); differences are
    paired so constant inputs give exact zeros."""
    g = gray
    gh = ((g[:-2, 2:] - g[:-2, :-2])
          + (g[1:-1, 2:] - g[1:-1, :-2])
          + (g[2:, 2:] - g[2:, :-2]))
    gv = ((g[2:, :-2] - g[:-2, :-2])
          + (g[2:, 1:-1] - g[:-2, 1:-1])
          + (g[2:, 2:] - g[:-2, 2:]))
    return gh, gv


def directionality(gray: np.ndarray) -> np.ndarray:
    gh, gv = _prewitt(gray)
    magnitude = (np.abs(gh) + np.abs(gv)) / 2.0
    mask = magnitude > MAGNITUDE_THRESHOLD
    hist = np.zeros(DIRECTIONALITY_BINS)
    if not mask.any():
        return hist
    theta = np.mod(np.arctan2(gv[mask], gh[mask]), np.pi)
    bins = np.minimum((theta / np.pi * DIRECTIONALITY_BINS).astype(np.int64),
                      DIRECTIONALITY_BINS - 1)
    hist = np.bincount(bins, minlength=DIRECTIONALITY_BINS).astype(np.float64)
    return hist / hist.sum()


def tamura(img: ImageTensor) -> np.ndarray:
    """18 values: [coarseness, contrast, directionality histogram (16)]."""
    gray = gray_plane(img)
    if min(gray.shape) < MIN_SIZE:
        raise ValueError(
            f"tamura needs at least {MIN_SIZE}x{MIN_SIZE} pixels, got "
            f"{gray.shape[1]}x{gray.shape[0]}")
    out = np.empty(18)
    out[0] = coarseness(gray)
    out[1] = contrast(gray)
    out[2:] = directionality(gray)
    return out
