"""Joint composite descriptor: a 24-bin fuzzy color histogram crossed with
7 joint texture areas (168 values, L1-normalized).

This is a from-scratch reconstruction. The color unit uses trapezoidal hue
memberships for seven chromatic families plus fuzzy black/gray/white rules,
expanded to the 24-color set by splitting each chromatic family into plain,
light, and dark shades. Texture areas reuse the edge-histogram module's
five-filter block classifier on 40x40 regions; a seventh area fires when
one-level Haar detail energy exceeds 6% of the region's power.
"""

from __future__ import annotations

import numpy as np

from ..imaging import HSV, ImageTensor, convert, gray_plane
from .edge_histogram import FILTERS, THRESHOLD

REGION = 40
MIN_SIZE = REGION
N_COLORS = 24
# Texture areas, in output order.
NON_EDGE, NON_DIRECTIONAL, AREA_HORIZONTAL, AREA_VERTICAL, AREA_45, AREA_135, \
    HIGH_ENERGY = range(7)
N_AREAS = 7
N_VALUES = N_AREAS * N_COLORS

HAAR_ENERGY_RATIO = 0.06

# Chromatic hue families: (center degrees, plateau half-width, slope width).
HUE_FAMILIES = (
    ("red", 0.0, 10.0, 20.0),
    ("orange", 30.0, 10.0, 20.0),
    ("yellow", 60.0, 25.0, 25.0),
    ("green", 120.0, 35.0, 30.0),
    ("cyan", 180.0, 25.0, 30.0),
    ("blue", 240.0, 35.0, 30.0),
    ("magenta", 300.0, 30.0, 30.0),
)

# Edge-filter winner (edge_histogram bin order) -> texture area.
_FILTER_TO_AREA = (AREA_VERTICAL, AREA_HORIZONTAL, AREA_45, AREA_135,
                   NON_DIRECTIONAL)


def _ramp(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """0 below lo, 1 above hi, linear between."""
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def _color_factors(h: np.ndarray, s: np.ndarray, v: np.ndarray):
    """Factor planes behind the color memberships: achromatic shares
    (black/gray/white), chromatic-weighted hue memberships, and the
    (plain, light, dark) shade split."""
    chromatic = np.minimum(_ramp(s, 0.08, 0.22), _ramp(v, 0.12, 0.30))
    achromatic = 1.0 - chromatic
    black = 1.0 - _ramp(v, 0.25, 0.45)
    white = _ramp(v, 0.65, 0.85)
    gray = 1.0 - black - white

    hue = np.empty((len(HUE_FAMILIES),) + h.shape)
    for i, (_, center, plateau, slope) in enumerate(HUE_FAMILIES):
        dist = np.abs(h - center)
        dist = np.minimum(dist, 360.0 - dist)
        hue[i] = np.clip(1.0 - (dist - plateau) / slope, 0.0, 1.0)
    total = hue.sum(axis=0)
    hue *= chromatic / np.where(total > 0, total, 1.0)

    dark = 1.0 - _ramp(v, 0.35, 0.60)
    saturated = _ramp(s, 0.35, 0.60)
    light = (1.0 - dark) * (1.0 - saturated)
    plain = (1.0 - dark) * saturated

    achromatic_shares = np.stack([achromatic * black, achromatic * gray,
                                  achromatic * white])
    shades = np.stack([plain, light, dark])
    return achromatic_shares, hue, shades


def fuzzy_color_memberships(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-pixel memberships over the 24 colors; each pixel's row sums to 1.

    Layout: [black, gray, white] then (plain, light, dark) per hue family.
    """
    achromatic_shares, hue, shades = _color_factors(h, s, v)
    out = np.empty((N_COLORS,) + h.shape)
    out[:3] = achromatic_shares
    for i in range(len(HUE_FAMILIES)):
        out[3 + 3 * i:6 + 3 * i] = hue[i] * shades
    return out


def _pad_to_regions(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    pad_h = (-h) % REGION
    pad_w = (-w) % REGION
    if pad_h or pad_w:
        plane = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
    return plane


def region_texture_areas(gray: np.ndarray) -> np.ndarray:
    """Boolean (n_regions_y, n_regions_x, 7) activation map for a padded
    gray plane whose dimensions are multiples of REGION."""
    h, w = gray.shape
    nry, nrx = h // REGION, w // REGION
    half = REGION // 2
    cells = gray.reshape(nry, 2, half, nrx, 2, half).mean(axis=(2, 5))
    cells = cells.transpose(0, 2, 1, 3).reshape(nry, nrx, 4)
    responses = np.abs(cells @ FILTERS.T)
    winner = responses.argmax(axis=-1)
    has_edge = responses.max(axis=-1) > THRESHOLD

    # One-level Haar detail-energy ratio per region.
    a = gray[0::2, 0::2]
    b = gray[0::2, 1::2]
    c = gray[1::2, 0::2]
    d = gray[1::2, 1::2]
    lh = (a - b + c - d) / 2.0
    hl = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    detail = lh * lh + hl * hl + hh * hh
    power = a * a + b * b + c * c + d * d
    detail = detail.reshape(nry, half, nrx, half).sum(axis=(1, 3))
    power = power.reshape(nry, half, nrx, half).sum(axis=(1, 3))
    ratio = np.divide(detail, power, out=np.zeros_like(detail), where=power > 0)

    active = np.zeros((nry, nrx, N_AREAS), dtype=bool)
    active[..., NON_EDGE] = ~has_edge
    for filt, area in enumerate(_FILTER_TO_AREA):
        active[..., area] = has_edge & (winner == filt)
    active[..., HIGH_ENERGY] = ratio > HAAR_ENERGY_RATIO
    return active


def jcd(img: ImageTensor) -> np.ndarray:
    """168 values, area-major: area 0 colors 0..23, area 1 colors 0..23, ..."""
    if img.height < MIN_SIZE or img.width < MIN_SIZE:
        raise ValueError(f"jcd needs at least {MIN_SIZE}x{MIN_SIZE} pixels, "
                         f"got {img.width}x{img.height}")
    hsv = convert(img, HSV)
    h = _pad_to_regions(hsv.planes[0])
    s = _pad_to_regions(hsv.planes[1])
    v = _pad_to_regions(hsv.planes[2])
    gray = _pad_to_regions(gray_plane(img))

    nry, nrx = h.shape[0] // REGION, h.shape[1] // REGION
    achromatic_shares, hue, shades = _color_factors(h, s, v)
    blocks = (nry, REGION, nrx, REGION)
    region_colors = np.empty((N_COLORS, nry, nrx))
    region_colors[:3] = achromatic_shares.reshape((3,) + blocks).sum(axis=(2, 4))
    # Chromatic region masses: sum over region pixels of hue_i * shade_j,
    # batched as one small matmul per region.
    chroma = np.einsum("iarbs,jarbs->abij", hue.reshape((-1,) + blocks),
                       shades.reshape((3,) + blocks))
    for i in range(len(HUE_FAMILIES)):
        for j in range(3):
            region_colors[3 + 3 * i + j] = chroma[..., i, j]
    active = region_texture_areas(gray)

    out = np.zeros((N_AREAS, N_COLORS))
    for area in range(N_AREAS):
        mask = active[..., area]
        if mask.any():
            out[area] = region_colors[:, mask].sum(axis=1)
    flat = out.ravel()
    total = flat.sum()
    if total > 0:
        flat = flat / total
    return flat
