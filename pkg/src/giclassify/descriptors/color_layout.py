"""Color layout descriptor: 8x8 grid of YCbCr cell means, orthonormal 8x8
DCT-II per channel, zigzag scan, keeping 6 Y + 3 Cb + 3 Cr coefficients."""

from __future__ import annotations

import numpy as np

from ..imaging import YCBCR, ImageTensor, convert

GRID = 8
N_Y, N_CB, N_CR = 6, 3, 3

ZIGZAG = (
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
)


def _dct_matrix(n: int = GRID) -> np.ndarray:
    r = np.arange(n)
    c = np.cos(np.pi * (2 * r[np.newaxis, :] + 1) * r[:, np.newaxis] / (2 * n))
    c *= np.sqrt(2.0 / n)
    c[0, :] = np.sqrt(1.0 / n)
    return c


_DCT = _dct_matrix()


def _cell_means(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    rows = (np.arange(GRID + 1) * h) // GRID
    cols = (np.arange(GRID + 1) * w) // GRID
    out = np.empty((GRID, GRID))
    for i in range(GRID):
        for j in range(GRID):
            out[i, j] = plane[rows[i]:rows[i + 1], cols[j]:cols[j + 1]].mean()
    return out


def _dct_2d(block: np.ndarray) -> np.ndarray:
    # Transform the mean-removed block so a constant block yields exact
    # zeros in every AC coefficient; the mean only feeds the DC term.
    mean = block.mean()
    coeffs = _DCT @ (block - mean) @ _DCT.T
    coeffs[0, 0] += GRID * mean
    return coeffs


def color_layout(img: ImageTensor) -> np.ndarray:
    """12 values: zigzag DCT coefficients (6 from Y, 3 from Cb, 3 from Cr)."""
    if img.height < GRID or img.width < GRID:
        raise ValueError(f"color_layout needs at least {GRID}x{GRID} pixels, "
                         f"got {img.width}x{img.height}")
    ycbcr = convert(img, YCBCR)
    out = np.empty(N_Y + N_CB + N_CR)
    pos = 0
    for channel, keep in zip(ycbcr.planes, (N_Y, N_CB, N_CR)):
        coeffs = _dct_2d(_cell_means(channel)).ravel()
        out[pos:pos + keep] = coeffs[list(ZIGZAG[:keep])]
        pos += keep
    return out
