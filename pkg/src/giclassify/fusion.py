"""Late fusion of two 16-class probability branches: elementwise averaging
and a trained 32-32-16 MLP fusion head, plus import of branch probability
files produced by external models.

A single imported branch evaluated directly covers the one-branch method;
no dedicated code path exists for it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nnet
from .dataset import N_CLASSES

SUM_TOLERANCE = (0.98, 1.02)


@dataclass(frozen=True)
class BranchOutputs:
    probs: dict[str, np.ndarray]
    source: str

    def matrix(self, image_ids: list[str]) -> np.ndarray:
        missing = [i for i in image_ids if i not in self.probs]
        if missing:
            raise KeyError(f"branch {self.source!r} is missing "
                           f"{len(missing)} image ids: {missing[:10]}")
        return np.vstack([self.probs[i] for i in image_ids])


def validate_probability_vector(p: np.ndarray, *, renormalize: bool = False) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (N_CLASSES,):
        raise ValueError(f"probability vector must have {N_CLASSES} entries, "
                         f"got shape {p.shape}")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must be in [0, 1]")
    total = p.sum()
    if renormalize:
        if not SUM_TOLERANCE[0] <= total <= SUM_TOLERANCE[1]:
            raise ValueError(f"probability sum {total:.6f} outside "
                             f"[{SUM_TOLERANCE[0]}, {SUM_TOLERANCE[1]}]")
        return p / total
    return p


def average_fusion(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Elementwise mean of two probability vectors (or row-aligned matrices)."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ValueError(f"shape mismatch {p1.shape} vs {p2.shape}")
    return (p1 + p2) / 2.0


def predict_label(p: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest class index."""
    return int(np.argmax(p))


@dataclass(frozen=True)
class DualBranchConfig:
    epochs: int = 30
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 42
    lr1: float = 0.01
    lr2: float = 0.01
    lr_factor: float = 0.1
    lr_patience: int = 3
    min_lr: float = 1e-5


def train_dual_branch(
    branch1: nnet.NetState,
    branch2: nnet.NetState,
    train_x: np.ndarray,
    train_labels: np.ndarray,
    val_x: np.ndarray,
    val_labels: np.ndarray,
    cfg: DualBranchConfig,
) -> tuple[nnet.NetState, nnet.NetState, list[tuple[int, float, float, float, float]]]:
    """Train both branches simultaneously, each against its own
    cross-entropy loss; the averaged validation accuracy drives one shared
    plateau schedule scaling both branch rates.

    Returns the branch snapshots at the best fused validation accuracy and
    a (epoch, loss1, loss2, fused_val_acc, decay) history.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    val_x = np.asarray(val_x, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    val_labels = np.asarray(val_labels, dtype=np.int64)
    n_out = branch1.spec.layer_sizes[-1]
    targets = nnet.one_hot(train_labels, n_out)
    rng = np.random.default_rng(cfg.seed)
    schedule = nnet.LrSchedule(initial_lr=1.0, factor=cfg.lr_factor,
                               patience=cfg.lr_patience,
                               min_lr=cfg.min_lr / max(cfg.lr1, cfg.lr2, cfg.min_lr))
    history = []
    best = (branch1.copy(), branch2.copy())
    best_acc = -1.0
    n = train_x.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        decay = schedule.lr
        order = rng.permutation(n)
        sums = [0.0, 0.0]
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = train_x[idx], targets[idx]
            for slot, (branch, lr) in enumerate(
                    ((branch1, cfg.lr1), (branch2, cfg.lr2))):
                grads = nnet.gradients(branch, xb, yb)
                if lr * decay > 0:
                    nnet.sgd_step(branch, grads, lr * decay, cfg.momentum)
                sums[slot] += nnet.loss_value(branch, xb, yb) * idx.size
        fused = average_fusion(nnet.forward(branch1, val_x),
                               nnet.forward(branch2, val_x))
        fused_acc = float((fused.argmax(axis=1) == val_labels).mean())
        history.append((epoch, sums[0] / n, sums[1] / n, fused_acc, decay))
        if fused_acc > best_acc:
            best_acc = fused_acc
            best = (branch1.copy(), branch2.copy())
        nnet.schedule_update(schedule, fused_acc)
    return best[0], best[1], history


def build_fusion_mlp(seed: int) -> nnet.NetState:
    """32-input, one 32-unit ReLU hidden layer, 16 sigmoid outputs, BCE."""
    spec = nnet.NetSpec((2 * N_CLASSES, 32, N_CLASSES),
                        hidden_activation=nnet.RELU,
                        output_activation=nnet.SIGMOID,
                        loss=nnet.BCE)
    return nnet.init_net(spec, seed)


def fusion_inputs(
    branch1: BranchOutputs,
    branch2: BranchOutputs,
    image_ids: list[str],
) -> np.ndarray:
    """Concatenated [p1 || p2] rows (32 wide) for the given ids."""
    return np.hstack([branch1.matrix(image_ids), branch2.matrix(image_ids)])


def train_fusion(
    mlp: nnet.NetState,
    branch1: BranchOutputs,
    branch2: BranchOutputs,
    train_ids: list[str],
    train_labels: np.ndarray,
    val_ids: list[str],
    val_labels: np.ndarray,
    cfg: nnet.TrainConfig,
) -> tuple[nnet.NetState, list]:
    """Train only the fusion head on frozen branch probabilities."""
    train_x = fusion_inputs(branch1, branch2, train_ids)
    val_x = fusion_inputs(branch1, branch2, val_ids)
    return nnet.train(mlp, train_x, train_labels, val_x, val_labels, cfg)


def import_branch_probs(path: str | Path) -> BranchOutputs:
    """Read a branch probability CSV (``image_id,p00..p15``); each row is
    validated against the sum tolerance and renormalized to sum 1."""
    path = Path(path)
    expected = ["image_id"] + [f"p{i:02d}" for i in range(N_CLASSES)]
    probs: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != N_CLASSES + 1:
                raise ValueError(f"{path}:{lineno}: expected {N_CLASSES + 1} "
                                 f"columns, got {len(row)}")
            image_id = row[0]
            if image_id in probs:
                raise ValueError(f"{path}:{lineno}: duplicate image_id "
                                 f"{image_id!r}")
            try:
                vector = np.array([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            try:
                probs[image_id] = validate_probability_vector(
                    vector, renormalize=True)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return BranchOutputs(probs, str(path))


def write_branch_probs(path: str | Path, outputs: BranchOutputs) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id"] + [f"p{i:02d}" for i in range(N_CLASSES)])
        for image_id in sorted(outputs.probs):
            writer.writerow([image_id] +
                            [f"{v:.9g}" for v in outputs.probs[image_id]])
