"""Confusion matrices and the evaluation metrics used in the result tables.

Two accuracy aggregates are always reported and clearly labelled:

- ``acc_overall`` = trace/N, the micro accuracy (equals micro REC, PREC,
  and F1 by construction);
- ``acc_perclass`` = 1 - 2(1-t)/C, the mean of per-class one-vs-rest
  accuracies.

The aggregate specificity is the micro true-negative rate, which with C-1
negatives per item reduces to 1 - (1-t)/(C-1). MCC is the multiclass R_k
statistic from the full contingency table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import CLASS_LETTERS, N_CLASSES


def confusion_matrix(pred, actual, n_classes: int = N_CLASSES) -> np.ndarray:
    """Count matrix with rows = actual class, columns = predicted class."""
    pred = np.asarray(pred, dtype=np.int64)
    actual = np.asarray(actual, dtype=np.int64)
    if pred.shape != actual.shape or pred.ndim != 1:
        raise ValueError(f"pred and actual must be equal-length 1-D, got "
                         f"{pred.shape} vs {actual.shape}")
    if pred.size == 0:
        raise ValueError("cannot build a confusion matrix from zero items")
    for name, arr in (("pred", pred), ("actual", actual)):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise ValueError(f"{name} labels out of range [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (actual, pred), 1)
    return cm


def mcc(cm: np.ndarray) -> float:
    """Multiclass R_k correlation from a confusion matrix; 0 when the
    marginals are degenerate."""
    cm = np.asarray(cm, dtype=np.float64)
    n = cm.sum()
    if n <= 0:
        raise ValueError("empty confusion matrix")
    actual = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    trace = np.trace(cm)
    cov_xy = trace * n - actual @ predicted
    cov_xx = n * n - predicted @ predicted
    cov_yy = n * n - actual @ actual
    denom = cov_xx * cov_yy
    if denom <= 0:
        return 0.0
    return float(cov_xy / np.sqrt(denom))


@dataclass(frozen=True)
class MetricsRow:
    rec: float
    prec: float
    spec: float
    acc_overall: float
    acc_perclass: float
    mcc: float
    f1: float
    fps: float | None = None
    per_class: dict = field(default_factory=dict)


def per_class_metrics(cm: np.ndarray) -> dict:
    """Per-class precision/recall/specificity/F1 lists (0 where undefined)."""
    cm = np.asarray(cm, dtype=np.float64)
    n = cm.sum()
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    tn = n - tp - fp - fn

    def safe(num, den):
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

    prec = safe(tp, tp + fp)
    rec = safe(tp, tp + fn)
    spec = safe(tn, tn + fp)
    f1 = safe(2 * prec * rec, prec + rec)
    return {
        "precision": prec.tolist(),
        "recall": rec.tolist(),
        "specificity": spec.tolist(),
        "f1": f1.tolist(),
    }


def micro_metrics(cm: np.ndarray, fps: float | None = None) -> MetricsRow:
    cm = np.asarray(cm)
    n = int(cm.sum())
    if n <= 0:
        raise ValueError("confusion matrix has no items")
    c = cm.shape[0]
    t = float(np.trace(cm)) / n
    return MetricsRow(
        rec=t,
        prec=t,
        spec=1.0 - (1.0 - t) / (c - 1),
        acc_overall=t,
        acc_perclass=1.0 - 2.0 * (1.0 - t) / c,
        mcc=mcc(cm),
        f1=t,
        fps=fps,
        per_class=per_class_metrics(cm),
    )


def fps(n_images: int, wall_seconds: float) -> float:
    """Images per second; zero images gives 0, nonpositive time is an error."""
    if wall_seconds <= 0:
        raise ValueError(f"wall_seconds must be positive, got {wall_seconds}")
    if n_images == 0:
        return 0.0
    return n_images / wall_seconds


def _fmt(value: float | None, decimals: int = 4) -> str:
    return "-" if value is None else f"{value:.{decimals}f}"


def render_report(
    rows: list[tuple[str, MetricsRow]],
    cm: np.ndarray | None,
    out_dir: str | Path,
    *,
    stem: str = "report",
) -> dict[str, Path]:
    """Write ``<stem>.md`` (4-decimal table), ``<stem>.json`` (full
    precision), and ``confusion.csv`` (letter-labelled counts)."""
    if not rows:
        raise ValueError("render_report needs at least one metrics row")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    md_path = out_dir / f"{stem}.md"
    lines = ["| Method | REC | PREC | SPEC | ACC | MCC | F1 | FPS |",
             "|---|---|---|---|---|---|---|---|"]
    for name, row in rows:
        fps_cell = "-" if row.fps is None else f"{row.fps:.0f}"
        lines.append(
            f"| {name} | {_fmt(row.rec)} | {_fmt(row.prec)} | {_fmt(row.spec)} "
            f"| {_fmt(row.acc_overall)} | {_fmt(row.mcc)} | {_fmt(row.f1)} "
            f"| {fps_cell} |")
    md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written["markdown"] = md_path

    json_path = out_dir / f"{stem}.json"
    payload = []
    for name, row in rows:
        payload.append({
            "method": name,
            "rec": row.rec,
            "prec": row.prec,
            "spec": row.spec,
            "acc_overall": row.acc_overall,
            "acc_perclass": row.acc_perclass,
            "mcc": row.mcc,
            "f1": row.f1,
            "fps": row.fps,
            "per_class": row.per_class,
        })
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    written["json"] = json_path

    if cm is not None:
        cm = np.asarray(cm)
        letters = CLASS_LETTERS[:cm.shape[0]]
        csv_path = out_dir / "confusion.csv"
        lines = ["actual\\predicted," + ",".join(letters)]
        for letter, row in zip(letters, cm):
            lines.append(letter + "," + ",".join(str(int(v)) for v in row))
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written["confusion"] = csv_path
    return written
