"""Brute-force reference implementations used to compute expected values.

Everything here favors directness over speed: explicit loops, longhand
formulas, no shared vectorized code paths with the package (definition
constants are imported so both sides agree on what is being computed).
"""

from __future__ import annotations

import math

import numpy as np

from giclassify.descriptors.correlogram import (DISTANCES, N_COLORS,
                                                quantize_hsv)
from giclassify.descriptors.edge_histogram import (TARGET_BLOCKS, THRESHOLD,
                                                   block_edge_for)
from giclassify.descriptors.jcd import (HAAR_ENERGY_RATIO, HUE_FAMILIES,
                                        REGION)
from giclassify.descriptors.tamura import (DIFF_EPSILON, DIRECTIONALITY_BINS,
                                           MAGNITUDE_THRESHOLD, N_SCALES)
from giclassify.imaging import ImageTensor, gray_plane


def coarseness_reference(gray: np.ndarray) -> float:
    """Window means by direct shift-accumulation over every offset; scale
    picks quantize differences and break ties toward the larger scale."""
    h, w = gray.shape
    ys, xs = np.arange(h), np.arange(w)
    scored = []
    for k in range(1, N_SCALES + 1):
        size, half = 2 ** k, 2 ** (k - 1)
        acc = np.zeros((h, w))
        for oy in range(-half, half):
            rows = np.clip(ys + oy, 0, h - 1)
            for ox in range(-half, half):
                cols = np.clip(xs + ox, 0, w - 1)
                acc += gray[np.ix_(rows, cols)]
        avg = acc / (size * size)
        e_h = np.abs(avg[:, np.clip(xs + half, 0, w - 1)]
                     - avg[:, np.clip(xs - half, 0, w - 1)])
        e_v = np.abs(avg[np.clip(ys + half, 0, h - 1), :]
                     - avg[np.clip(ys - half, 0, h - 1), :])
        scored.append(np.rint(np.maximum(e_h, e_v) / DIFF_EPSILON).astype(np.int64))
    total = 0.0
    for y in range(h):
        for x in range(w):
            values = [scored[k][y, x] for k in range(N_SCALES)]
            peak = max(values)
            if peak == 0:
                best = 1
            else:
                best = max(k + 1 for k in range(N_SCALES) if values[k] == peak)
            total += 2.0 ** best
    return total / (h * w)


def directionality_reference(gray: np.ndarray) -> np.ndarray:
    h, w = gray.shape
    hist = np.zeros(DIRECTIONALITY_BINS)
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            gh = sum(gray[y + dy, x + 1] - gray[y + dy, x - 1]
                     for dy in (-1, 0, 1))
            gv = sum(gray[y + 1, x + dx] - gray[y - 1, x + dx]
                     for dx in (-1, 0, 1))
            if (abs(gh) + abs(gv)) / 2.0 <= MAGNITUDE_THRESHOLD:
                continue
            theta = math.atan2(gv, gh) % math.pi
            idx = min(int(theta / math.pi * DIRECTIONALITY_BINS),
                      DIRECTIONALITY_BINS - 1)
            hist[idx] += 1
    total = hist.sum()
    return hist / total if total > 0 else hist


def dct_8x8_reference(block: np.ndarray) -> np.ndarray:
    n = 8
    out = np.zeros((n, n))
    for p in range(n):
        for q in range(n):
            ap = math.sqrt(1.0 / n) if p == 0 else math.sqrt(2.0 / n)
            aq = math.sqrt(1.0 / n) if q == 0 else math.sqrt(2.0 / n)
            total = 0.0
            for r in range(n):
                for c in range(n):
                    total += (block[r, c]
                              * math.cos(math.pi * (2 * r + 1) * p / (2 * n))
                              * math.cos(math.pi * (2 * c + 1) * q / (2 * n)))
            out[p, q] = ap * aq * total
    return out


def edge_histogram_reference(gray: np.ndarray) -> np.ndarray:
    h, w = gray.shape
    out = np.zeros(80)
    rows = [(i * h) // 4 for i in range(5)]
    cols = [(j * w) // 4 for j in range(5)]
    for si in range(4):
        for sj in range(4):
            sub = gray[rows[si]:rows[si + 1], cols[sj]:cols[sj + 1]]
            sub_h, sub_w = sub.shape
            edge = max(2, int(math.floor(
                math.sqrt(sub_h * sub_w / TARGET_BLOCKS) / 2.0)) * 2)
            half = edge // 2
            counts = [0, 0, 0, 0, 0]
            n_blocks = 0
            for by in range(0, sub_h - edge + 1, edge):
                for bx in range(0, sub_w - edge + 1, edge):
                    n_blocks += 1
                    a = sub[by:by + half, bx:bx + half].mean()
                    b = sub[by:by + half, bx + half:bx + edge].mean()
                    c = sub[by + half:by + edge, bx:bx + half].mean()
                    d = sub[by + half:by + edge, bx + half:bx + edge].mean()
                    responses = [abs(a - b + c - d),
                                 abs(a + b - c - d),
                                 abs(math.sqrt(2) * a - math.sqrt(2) * d),
                                 abs(math.sqrt(2) * b - math.sqrt(2) * c),
                                 abs(2 * a - 2 * b - 2 * c + 2 * d)]
                    strongest = max(responses)
                    if strongest > THRESHOLD:
                        counts[responses.index(strongest)] += 1
            base = (si * 4 + sj) * 5
            for bin_idx in range(5):
                out[base + bin_idx] = counts[bin_idx] / n_blocks
    return out


def correlogram_reference(img: ImageTensor) -> np.ndarray:
    q = quantize_hsv(img)
    h, w = q.shape
    out = np.zeros(N_COLORS * len(DISTANCES))
    for color in range(N_COLORS):
        for di, d in enumerate(DISTANCES):
            num = den = 0
            for y in range(h):
                for x in range(w):
                    if q[y, x] != color:
                        continue
                    for dy in range(-d, d + 1):
                        for dx in range(-d, d + 1):
                            if max(abs(dy), abs(dx)) != d:
                                continue
                            ny, nx = y + dy, x + dx
                            if 0 <= ny < h and 0 <= nx < w:
                                den += 1
                                if q[ny, nx] == color:
                                    num += 1
            if den:
                out[color * len(DISTANCES) + di] = num / den
    return out


def phog_reference(gray: np.ndarray) -> np.ndarray:
    h, w = gray.shape
    levels = []
    for level in (0, 1, 2):
        grid = 2 ** level
        levels.append(np.zeros((grid * grid, 8)))
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            gx = ((gray[y - 1, x + 1] - gray[y - 1, x - 1])
                  + 2 * (gray[y, x + 1] - gray[y, x - 1])
                  + (gray[y + 1, x + 1] - gray[y + 1, x - 1]))
            gy = ((gray[y + 1, x - 1] - gray[y - 1, x - 1])
                  + 2 * (gray[y + 1, x] - gray[y - 1, x])
                  + (gray[y + 1, x + 1] - gray[y - 1, x + 1]))
            mag = math.hypot(gx, gy)
            theta = math.degrees(math.atan2(gy, gx)) % 360.0
            bin_idx = min(int(theta / 45.0), 7)
            for level in (0, 1, 2):
                grid = 2 ** level
                cell = ((y * grid) // h) * grid + (x * grid) // w
                levels[level][cell, bin_idx] += mag
    flat = np.concatenate([lv.ravel() for lv in levels])
    total = flat.sum()
    return flat / total if total > 0 else flat


def _pixel_color_memberships(h: float, s: float, v: float) -> np.ndarray:
    def ramp(x, lo, hi):
        return min(max((x - lo) / (hi - lo), 0.0), 1.0)

    chromatic = min(ramp(s, 0.08, 0.22), ramp(v, 0.12, 0.30))
    black = 1.0 - ramp(v, 0.25, 0.45)
    white = ramp(v, 0.65, 0.85)
    gray = 1.0 - black - white
    hue = []
    for _, center, plateau, slope in HUE_FAMILIES:
        dist = abs(h - center)
        dist = min(dist, 360.0 - dist)
        hue.append(min(max(1.0 - (dist - plateau) / slope, 0.0), 1.0))
    total = sum(hue)
    if total > 0:
        hue = [m / total for m in hue]
    dark = 1.0 - ramp(v, 0.35, 0.60)
    saturated = ramp(s, 0.35, 0.60)
    light = (1.0 - dark) * (1.0 - saturated)
    plain = (1.0 - dark) * saturated
    out = np.zeros(24)
    achromatic = 1.0 - chromatic
    out[0] = achromatic * black
    out[1] = achromatic * gray
    out[2] = achromatic * white
    for i, m in enumerate(hue):
        out[3 + 3 * i] = chromatic * m * plain
        out[4 + 3 * i] = chromatic * m * light
        out[5 + 3 * i] = chromatic * m * dark
    return out


def jcd_reference(img: ImageTensor) -> np.ndarray:
    from giclassify.imaging import HSV, convert

    hsv = convert(img, HSV)
    gray = gray_plane(img)
    h, w = gray.shape
    pad_h, pad_w = (-h) % REGION, (-w) % REGION
    planes = [np.pad(p, ((0, pad_h), (0, pad_w)), mode="edge")
              for p in (hsv.planes[0], hsv.planes[1], hsv.planes[2], gray)]
    hp, sp, vp, gp = planes
    ph, pw = gp.shape
    out = np.zeros((7, 24))
    for ry in range(ph // REGION):
        for rx in range(pw // REGION):
            sl = np.s_[ry * REGION:(ry + 1) * REGION,
                       rx * REGION:(rx + 1) * REGION]
            colors = np.zeros(24)
            region_h, region_s, region_v = hp[sl], sp[sl], vp[sl]
            for y in range(REGION):
                for x in range(REGION):
                    colors += _pixel_color_memberships(
                        region_h[y, x], region_s[y, x], region_v[y, x])
            region_g = gp[sl]
            half = REGION // 2
            a = region_g[:half, :half].mean()
            b = region_g[:half, half:].mean()
            c = region_g[half:, :half].mean()
            d = region_g[half:, half:].mean()
            responses = [abs(a - b + c - d),
                         abs(a + b - c - d),
                         abs(math.sqrt(2) * a - math.sqrt(2) * d),
                         abs(math.sqrt(2) * b - math.sqrt(2) * c),
                         abs(2 * a - 2 * b - 2 * c + 2 * d)]
            strongest = max(responses)
            if strongest > THRESHOLD:
                area = (3, 2, 4, 5, 1)[responses.index(strongest)]
            else:
                area = 0
            out[area] += colors
            detail = power = 0.0
            for y in range(0, REGION, 2):
                for x in range(0, REGION, 2):
                    qa, qb = region_g[y, x], region_g[y, x + 1]
                    qc, qd = region_g[y + 1, x], region_g[y + 1, x + 1]
                    detail += (((qa - qb + qc - qd) / 2) ** 2
                               + ((qa + qb - qc - qd) / 2) ** 2
                               + ((qa - qb - qc + qd) / 2) ** 2)
                    power += qa * qa + qb * qb + qc * qc + qd * qd
            if power > 0 and detail / power > HAAR_ENERGY_RATIO:
                out[6] += colors
    flat = out.ravel()
    total = flat.sum()
    return flat / total if total > 0 else flat


def rk_mcc_reference(cm: np.ndarray) -> float:
    """R_k from per-sample one-hot covariances, expanded sample by sample."""
    cm = np.asarray(cm)
    k = cm.shape[0]
    samples = []
    for actual in range(k):
        for predicted in range(k):
            samples.extend([(actual, predicted)] * int(cm[actual, predicted]))
    n = len(samples)
    mean_actual = [sum(1 for a, _ in samples if a == c) / n for c in range(k)]
    mean_pred = [sum(1 for _, p in samples if p == c) / n for c in range(k)]
    cov_xy = cov_xx = cov_yy = 0.0
    for c in range(k):
        for a, p in samples:
            x = (1.0 if p == c else 0.0) - mean_pred[c]
            y = (1.0 if a == c else 0.0) - mean_actual[c]
            cov_xy += x * y
            cov_xx += x * x
            cov_yy += y * y
    denom = math.sqrt(cov_xx) * math.sqrt(cov_yy)
    return cov_xy / denom if denom > 0 else 0.0


def finite_difference_gradients(net, x, target, h=1e-5):
    """Central differences of the mean loss over every weight and bias."""
    from giclassify import nnet

    grads_w = [np.zeros_like(w) for w in net.weights]
    grads_b = [np.zeros_like(b) for b in net.biases]
    for layer, w in enumerate(net.weights):
        it = np.nditer(w, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = w[idx]
            w[idx] = original + h
            up = nnet.loss_value(net, x, target)
            w[idx] = original - h
            down = nnet.loss_value(net, x, target)
            w[idx] = original
            grads_w[layer][idx] = (up - down) / (2 * h)
            it.iternext()
    for layer, b in enumerate(net.biases):
        for idx in range(b.size):
            original = b[idx]
            b[idx] = original + h
            up = nnet.loss_value(net, x, target)
            b[idx] = original - h
            down = nnet.loss_value(net, x, target)
            b[idx] = original
            grads_b[layer][idx] = (up - down) / (2 * h)
    return grads_w, grads_b


def info_gain_reference(x: np.ndarray, labels: np.ndarray):
    """Exhaustive best (gain, attribute, midpoint) information-gain split."""

    def entropy(subset):
        total = len(subset)
        if total == 0:
            return 0.0
        out = 0.0
        for cls in set(subset):
            p = subset.count(cls) / total
            out -= p * math.log2(p)
        return out

    labels = list(labels)
    n = len(labels)
    parent = entropy(labels)
    best = None
    for attr in range(x.shape[1]):
        values = sorted(set(x[:, attr]))
        for lo, hi in zip(values[:-1], values[1:]):
            threshold = (lo + hi) / 2.0
            left = [labels[i] for i in range(n) if x[i, attr] <= threshold]
            right = [labels[i] for i in range(n) if x[i, attr] > threshold]
            gain = (parent - len(left) / n * entropy(left)
                    - len(right) / n * entropy(right))
            if best is None or gain > best[0]:
                best = (gain, attr, threshold)
    return best
