"""Class-folder dataset discovery, stratified 70/30 splitting, and the
out-of-patient training-set substitution policy.

A dataset root contains one subdirectory per class, each holding JPEG/PNG
images. Splits are written as CSV (``image_id,label,subset``) with LF line
endings so they are byte-reproducible across machines.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

# Fixed 16-class vocabulary; index order doubles as the letter order A..P
# used in confusion-matrix reports. Must never be reordered.
CLASS_NAMES = (
    "blurry-nothing",
    "colon-clear",
    "dyed-lifted-polyps",
    "dyed-resection-margins",
    "esophagitis",
    "instruments",
    "normal-cecum",
    "normal-pylorus",
    "normal-z-line",
    "out-of-patient",
    "polyps",
    "retroflex-rectum",
    "retroflex-stomach",
    "stool-inclusions",
    "stool-plenty",
    "ulcerative-colitis",
)

N_CLASSES = len(CLASS_NAMES)
CLASS_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}
CLASS_LETTERS = tuple(chr(ord("A") + i) for i in range(N_CLASSES))

OUT_OF_PATIENT = "out-of-patient"
DISTRACTOR_PREFIX = "distractors/"

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png"}


class UnknownClassError(ValueError):
    """Raised when a dataset root contains a directory that is not a class name."""


class EmptyDatasetError(ValueError):
    """Raised when a dataset root or a required class has no images."""


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str

    def __post_init__(self):
        if CLASS_NAMES[self.index] != self.name:
            raise ValueError(f"label mismatch: index {self.index} is "
                             f"{CLASS_NAMES[self.index]!r}, not {self.name!r}")


def label_for(name: str) -> ClassLabel:
    if name not in CLASS_INDEX:
        raise UnknownClassError(f"unknown class name {name!r}")
    return ClassLabel(CLASS_INDEX[name], name)


@dataclass(frozen=True)
class IndexEntry:
    image_id: str
    path: str
    label: ClassLabel


@dataclass(frozen=True)
class DatasetIndex:
    entries: tuple[IndexEntry, ...]
    root: str

    def by_id(self) -> dict[str, IndexEntry]:
        return {e.image_id: e for e in self.entries}

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in CLASS_NAMES}
        for e in self.entries:
            counts[e.label.name] += 1
        return counts


@dataclass(frozen=True)
class SplitPair:
    train: tuple[str, ...]
    val: tuple[str, ...]
    seed: int
    ratio: float


def scan_dataset(root: str | Path) -> DatasetIndex:
    """Index every image under ``root``, one subdirectory per class.

    Entries are ordered lexicographically by path so the index (and any
    split derived from it) is machine-independent. Subdirectories whose
    name is not one of the 16 class names are an error.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDatasetError(f"dataset root {root} is not a directory")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not subdirs:
        raise EmptyDatasetError(f"dataset root {root} contains no class directories")
    entries = []
    for sub in subdirs:
        if sub.name not in CLASS_INDEX:
            raise UnknownClassError(
                f"directory {sub.name!r} under {root} is not a known class")
        label = label_for(sub.name)
        for path in sorted(sub.iterdir()):
            if path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS:
                image_id = f"{sub.name}/{path.name}"
                entries.append(IndexEntry(image_id, str(path), label))
    if not entries:
        raise EmptyDatasetError(f"dataset root {root} contains no images")
    return DatasetIndex(tuple(entries), str(root))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(index: DatasetIndex, ratio: float, seed: int) -> SplitPair:
    """Per-class train/val split with round-half-up train counts.

    Shuffling is seeded and applied per class over entries already in
    lexicographic order, so the same (index, ratio, seed) always yields the
    identical split.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    per_class: dict[int, list[str]] = {}
    for e in index.entries:
        per_class.setdefault(e.label.index, []).append(e.image_id)
    for ci, ids in per_class.items():
        if not ids:
            raise EmptyDatasetError(f"class {CLASS_NAMES[ci]!r} has no images")
    rng = np.random.default_rng(seed)
    train: list[str] = []
    val: list[str] = []
    for ci in sorted(per_class):
        ids = per_class[ci]
        order = rng.permutation(len(ids))
        n_train = _round_half_up(ratio * len(ids))
        shuffled = [ids[i] for i in order]
        train.extend(shuffled[:n_train])
        val.extend(shuffled[n_train:])
    return SplitPair(tuple(train), tuple(val), seed, ratio)


def apply_out_of_patient_policy(
    split: SplitPair,
    index: DatasetIndex,
    distractor_dir: str | Path | None = None,
) -> SplitPair:
    """Move every out-of-patient image into the validation half.

    If ``distractor_dir`` is given, its images are appended to the training
    half labelled out-of-patient under ids ``distractors/<filename>``;
    otherwise the training half simply loses the class. A split that never
    contained the class is returned unchanged with a warning.
    """
    labels = {e.image_id: e.label.name for e in index.entries}
    oop_train = [i for i in split.train if labels.get(i) == OUT_OF_PATIENT]
    oop_val = [i for i in split.val if labels.get(i) == OUT_OF_PATIENT]
    if not oop_train and not oop_val:
        log.warning("split contains no %s images; policy is a no-op", OUT_OF_PATIENT)
        return split
    train = [i for i in split.train if i not in set(oop_train)]
    val = list(split.val) + oop_train
    if distractor_dir is not None:
        distractor_dir = Path(distractor_dir)
        files = sorted(
            p for p in distractor_dir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        ) if distractor_dir.is_dir() else []
        if not files:
            raise EmptyDatasetError(
                f"distractor directory {distractor_dir} contains no images")
        train.extend(DISTRACTOR_PREFIX + p.name for p in files)
        log.info("added %d distractor images to the training half", len(files))
    return SplitPair(tuple(train), tuple(val), split.seed, split.ratio)


def write_split(path: str | Path, split: SplitPair, index: DatasetIndex) -> None:
    """Write ``image_id,label,subset`` CSV (UTF-8, LF), rows sorted by
    subset then image_id."""
    labels = {e.image_id: e.label.name for e in index.entries}
    rows = [(i, labels.get(i, OUT_OF_PATIENT), "train") for i in sorted(split.train)]
    rows += [(i, labels.get(i, OUT_OF_PATIENT), "val") for i in sorted(split.val)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "label", "subset"])
        writer.writerows(rows)


def read_split(path: str | Path) -> dict[str, tuple[str, str]]:
    """Read a split CSV back as ``{image_id: (label, subset)}``."""
    out: dict[str, tuple[str, str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["image_id", "label", "subset"]:
            raise ValueError(f"{path}: expected header image_id,label,subset")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            image_id, label, subset = row
            if label not in CLASS_INDEX:
                raise UnknownClassError(f"{path}:{lineno}: unknown class {label!r}")
            if subset not in ("train", "val"):
                raise ValueError(f"{path}:{lineno}: subset must be train or val")
            if image_id in out:
                raise ValueError(f"{path}:{lineno}: duplicate image_id {image_id!r}")
            out[image_id] = (label, subset)
    return out
