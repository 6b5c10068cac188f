"""MPEG-7 style edge histogram: 16 sub-images x 5 edge categories.

Each sub-image is tiled into even-sided macro-blocks of four pixel cells;
block edge is chosen so a sub-image holds on the order of 1100 blocks. The
five 2x2 filters run on the cell means and a block votes for its strongest
category when the response clears the threshold.
"""

from __future__ import annotations

import numpy as np

from ..imaging import ImageTensor, gray_plane

SUB_GRID = 4
TARGET_BLOCKS = 1100
THRESHOLD = 11.0 / 255.0
MIN_SIZE = 16

# Filter coefficients against cell means (a, b, c, d) = (top-left, top-right,
# bottom-left, bottom-right), in output bin order.
VERTICAL, HORIZONTAL, DIAG45, DIAG135, NONDIRECTIONAL = range(5)
_SQRT2 = np.sqrt(2.0)
FILTERS = np.array([
    [1.0, -1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
    [_SQRT2, 0.0, 0.0, -_SQRT2],
    [0.0, _SQRT2, -_SQRT2, 0.0],
    [2.0, -2.0, -2.0, 2.0],
])


def block_edge_for(sub_h: int, sub_w: int) -> int:
    """Even block edge targeting ~TARGET_BLOCKS blocks per sub-image."""
    edge = int(np.floor(np.sqrt(sub_h * sub_w / TARGET_BLOCKS) / 2.0)) * 2
    return max(2, edge)


def classify_blocks(cell_means: np.ndarray, threshold: float = THRESHOLD) -> np.ndarray:
    """Edge category per block from cell means shaped (..., 4); -1 = no edge."""
    responses = np.abs(cell_means @ FILTERS.T)
    winner = responses.argmax(axis=-1)
    strongest = responses.max(axis=-1)
    return np.where(strongest > threshold, winner, -1)


def _sub_image_histogram(sub: np.ndarray) -> np.ndarray:
    sub_h, sub_w = sub.shape
    edge = block_edge_for(sub_h, sub_w)
    half = edge // 2
    nby, nbx = sub_h // edge, sub_w // edge
    trimmed = sub[:nby * edge, :nbx * edge]
    cells = trimmed.reshape(nby, 2, half, nbx, 2, half).mean(axis=(2, 5))
    # (nby, nbx, 4) in (a, b, c, d) order
    cells = cells.transpose(0, 2, 1, 3).reshape(nby, nbx, 4)
    labels = classify_blocks(cells)
    counts = np.bincount(labels[labels >= 0].ravel(), minlength=5).astype(np.float64)
    return counts / float(nby * nbx)


def edge_histogram(img: ImageTensor) -> np.ndarray:
    """80 values: row-major 4x4 sub-images, 5 bins each in FILTERS order."""
    gray = gray_plane(img)
    h, w = gray.shape
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ValueError(f"edge_histogram needs at least {MIN_SIZE}x{MIN_SIZE} "
                         f"pixels, got {w}x{h}")
    rows = (np.arange(SUB_GRID + 1) * h) // SUB_GRID
    cols = (np.arange(SUB_GRID + 1) * w) // SUB_GRID
    out = np.empty(SUB_GRID * SUB_GRID * 5)
    for i in range(SUB_GRID):
        for j in range(SUB_GRID):
            sub = gray[rows[i]:rows[i + 1], cols[j]:cols[j + 1]]
            out[(i * SUB_GRID + j) * 5:(i * SUB_GRID + j) * 5 + 5] = \
                _sub_image_histogram(sub)
    return out
