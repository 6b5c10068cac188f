"""Six global image descriptors and their fixed 702-value concatenation.

Segment layout of the feature vector:

========== ============ ======
descriptor slice        length
========== ============ ======
tamura     [0, 18)      18
color      [18, 30)     12
edges      [30, 110)    80
correlo    [110, 366)   256
phog       [366, 534)   168
jcd        [534, 702)   168
========== ============ ======

``extract_all`` standardizes any input to 512x512 (bilinear) before
extraction so block geometry and runtime are stable.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..imaging import ImageTensor, resize
from .color_layout import color_layout
from .correlogram import auto_color_correlogram
from .edge_histogram import edge_histogram
from .jcd import jcd
from .phog import phog
from .tamura import tamura

STANDARD_SIZE = 512

SEGMENTS = {
    "tamura": slice(0, 18),
    "color_layout": slice(18, 30),
    "edge_histogram": slice(30, 110),
    "auto_color_correlogram": slice(110, 366),
    "phog": slice(366, 534),
    "jcd": slice(534, 702),
}
FEATURE_LENGTH = 702

_EXTRACTORS = (
    ("tamura", tamura),
    ("color_layout", color_layout),
    ("edge_histogram", edge_histogram),
    ("auto_color_correlogram", auto_color_correlogram),
    ("phog", phog),
    ("jcd", jcd),
)


def extract_all(img: ImageTensor) -> np.ndarray:
    """Compute all six descriptors on a 512x512-standardized image and
    concatenate them in the fixed segment layout."""
    if (img.width, img.height) != (STANDARD_SIZE, STANDARD_SIZE):
        img = resize(img, STANDARD_SIZE, STANDARD_SIZE)
    out = np.empty(FEATURE_LENGTH)
    for name, fn in _EXTRACTORS:
        out[SEGMENTS[name]] = fn(img)
    if not np.all(np.isfinite(out)):
        raise ValueError("descriptor output contains non-finite values")
    return out


def feature_header() -> list[str]:
    return ["image_id", "label"] + [f"f{i:03d}" for i in range(FEATURE_LENGTH)]


def write_features(path: str | Path, rows) -> None:
    """Write ``image_id,label,f000..f701`` CSV; values use 9 significant
    digits. ``rows`` yields (image_id, label, vector)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(feature_header())
        for image_id, label, vector in rows:
            if len(vector) != FEATURE_LENGTH:
                raise ValueError(f"{image_id}: expected {FEATURE_LENGTH} values, "
                                 f"got {len(vector)}")
            writer.writerow([image_id, label] + [f"{v:.9g}" for v in vector])


def read_features(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a feature CSV back as (image_ids, labels, matrix)."""
    ids: list[str] = []
    labels: list[str] = []
    data: list[np.ndarray] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != feature_header():
            raise ValueError(f"{path}: malformed feature header")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != FEATURE_LENGTH + 2:
                raise ValueError(f"{path}:{lineno}: expected "
                                 f"{FEATURE_LENGTH + 2} columns, got {len(row)}")
            ids.append(row[0])
            labels.append(row[1])
            data.append(np.array([float(v) for v in row[2:]]))
    matrix = np.vstack(data) if data else np.empty((0, FEATURE_LENGTH))
    return ids, labels, matrix


__all__ = [
    "FEATURE_LENGTH", "SEGMENTS", "STANDARD_SIZE",
    "auto_color_correlogram", "color_layout", "edge_histogram",
    "extract_all", "feature_header", "jcd", "phog", "read_features",
    "tamura", "write_features",
]
