"""Minimal feedforward network engine: dense layers, ReLU/sigmoid/softmax,
cross-entropy and BCE losses, momentum SGD, and reduce-on-plateau learning
rate scheduling driven by validation accuracy.

Loss conventions: cross-entropy is the mean over samples of
-sum_j y_j log p_j; BCE is the mean over samples of the sum over output
units of the binary cross-entropy. Gradients are exact for these means.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RELU = "relu"
SIGMOID = "sigmoid"
SOFTMAX = "softmax"
CROSS_ENTROPY = "cross_entropy"
BCE = "bce"

_EPS = 1e-12


class TrainingDivergedError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class NetSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = RELU
    output_activation: str = SOFTMAX
    loss: str = CROSS_ENTROPY

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or any(s <= 0 for s in self.layer_sizes):
            raise ValueError(f"layer_sizes must be >=2 positive ints, got "
                             f"{self.layer_sizes}")
        if self.hidden_activation not in (RELU, SIGMOID):
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in (SOFTMAX, SIGMOID):
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if self.loss not in (CROSS_ENTROPY, BCE):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass
class NetState:
    spec: NetSpec
    weights: list[np.ndarray]   # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]    # per layer, (fan_out,)
    velocity_w: list[np.ndarray]
    velocity_b: list[np.ndarray]
    seed: int

    def copy(self) -> "NetState":
        return NetState(
            self.spec,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            [v.copy() for v in self.velocity_w],
            [v.copy() for v in self.velocity_b],
            self.seed,
        )


@dataclass
class LrSchedule:
    initial_lr: float = 0.01
    factor: float = 0.1
    patience: int = 3
    min_lr: float = 1e-5
    lr: float = field(default=None)  # type: ignore[assignment]
    best_metric: float = -np.inf
    epochs_since_improve: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"factor must be in (0, 1), got {self.factor}")
        if self.lr is None:
            self.lr = self.initial_lr


def init_net(spec: NetSpec, seed: int) -> NetState:
    """Seeded Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases, vw, vb = [], [], [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
        vw.append(np.zeros((fan_in, fan_out)))
        vb.append(np.zeros(fan_out))
    return NetState(spec, weights, biases, vw, vb, seed)


def parameter_count(net: NetState) -> int:
    return sum(w.size + b.size for w, b in zip(net.weights, net.biases))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_pass(net: NetState, x: np.ndarray):
    """Returns (activations per layer incl. input, output)."""
    spec = net.spec
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[1] != spec.layer_sizes[0]:
        raise ValueError(f"input size {a.shape[1]} != net input "
                         f"{spec.layer_sizes[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite network input")
    activations = [a]
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        if i < n_layers - 1:
            a = np.maximum(z, 0.0) if spec.hidden_activation == RELU else _sigmoid(z)
        else:
            a = _softmax(z) if spec.output_activation == SOFTMAX else _sigmoid(z)
        activations.append(a)
    return activations, a


def forward(net: NetState, x: np.ndarray) -> np.ndarray:
    """Network output for a single vector (1-D in, 1-D out) or a batch."""
    single = np.asarray(x).ndim == 1
    _, out = _forward_pass(net, x)
    return out[0] if single else out


def loss_value(net: NetState, x: np.ndarray, target: np.ndarray) -> float:
    _, out = _forward_pass(net, x)
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    p = np.clip(out, _EPS, 1.0 - _EPS)
    if net.spec.loss == CROSS_ENTROPY:
        return float(-(y * np.log(p)).sum(axis=1).mean())
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum(axis=1).mean())


def gradients(net: NetState, x: np.ndarray, target: np.ndarray):
    """Exact gradients of the mean loss: (grads_w, grads_b)."""
    spec = net.spec
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    activations, out = _forward_pass(net, x)
    n = out.shape[0]
    if y.shape != out.shape:
        raise ValueError(f"target shape {y.shape} != output shape {out.shape}")
    # Softmax+CE and sigmoid+BCE share the same output-layer delta.
    if (spec.loss == CROSS_ENTROPY and spec.output_activation != SOFTMAX) or \
       (spec.loss == BCE and spec.output_activation != SIGMOID):
        raise ValueError(f"loss {spec.loss!r} requires the matching output "
                         f"activation")
    delta = (out - y) / n
    grads_w = [np.empty(0)] * len(net.weights)
    grads_b = [np.empty(0)] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        a_prev = activations[i]
        grads_w[i] = a_prev.T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            back = delta @ net.weights[i].T
            hidden = activations[i]
            if spec.hidden_activation == RELU:
                delta = back * (hidden > 0)
            else:
                delta = back * hidden * (1.0 - hidden)
    return grads_w, grads_b


def sgd_step(net: NetState, grads, lr: float, momentum: float = 0.9) -> NetState:
    """In-place momentum update: v <- momentum*v + g; w <- w - lr*v."""
    grads_w, grads_b = grads
    for i in range(len(net.weights)):
        if not (np.all(np.isfinite(grads_w[i])) and np.all(np.isfinite(grads_b[i]))):
            raise TrainingDivergedError("non-finite gradients in SGD step")
        net.velocity_w[i] = momentum * net.velocity_w[i] + grads_w[i]
        net.velocity_b[i] = momentum * net.velocity_b[i] + grads_b[i]
        net.weights[i] -= lr * net.velocity_w[i]
        net.biases[i] -= lr * net.velocity_b[i]
        if not np.all(np.isfinite(net.weights[i])):
            raise TrainingDivergedError("non-finite weights after SGD step")
    return net


def schedule_update(s: LrSchedule, val_accuracy: float) -> tuple[LrSchedule, float]:
    """Plateau rule: `patience` consecutive non-improving epochs multiply
    the rate by `factor`, floored at min_lr."""
    if not 0.0 <= val_accuracy <= 1.0:
        raise ValueError(f"val_accuracy must be in [0, 1], got {val_accuracy}")
    if val_accuracy > s.best_metric:
        s.best_metric = val_accuracy
        s.epochs_since_improve = 0
    else:
        s.epochs_since_improve += 1
        if s.epochs_since_improve >= s.patience:
            s.lr = max(s.lr * s.factor, s.min_lr)
            s.epochs_since_improve = 0
    return s, s.lr


def accuracy(net: NetState, x: np.ndarray, labels: np.ndarray) -> float:
    _, out = _forward_pass(net, x)
    return float((out.argmax(axis=1) == np.asarray(labels)).mean())


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 42
    initial_lr: float = 0.01
    lr_factor: float = 0.1
    lr_patience: int = 3
    min_lr: float = 1e-5

    def make_schedule(self) -> LrSchedule:
        return LrSchedule(initial_lr=self.initial_lr, factor=self.lr_factor,
                          patience=self.lr_patience, min_lr=self.min_lr)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def train(
    net: NetState,
    train_x: np.ndarray,
    train_labels: np.ndarray,
    val_x: np.ndarray,
    val_labels: np.ndarray,
    cfg: TrainConfig,
) -> tuple[NetState, list[tuple[int, float, float, float]]]:
    """Momentum SGD with seeded per-epoch shuffling; returns the snapshot
    with the best validation accuracy and a (epoch, train_loss, val_acc, lr)
    history."""
    train_x = np.asarray(train_x, dtype=np.float64)
    val_x = np.asarray(val_x, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    val_labels = np.asarray(val_labels, dtype=np.int64)
    if train_x.shape[0] == 0 or val_x.shape[0] == 0:
        raise ValueError("train and validation sets must be nonempty")
    n_out = net.spec.layer_sizes[-1]
    targets = one_hot(train_labels, n_out)
    rng = np.random.default_rng(cfg.seed)
    schedule = cfg.make_schedule()
    history: list[tuple[int, float, float, float]] = []
    best = net.copy()
    best_acc = -1.0
    n = train_x.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        lr_used = schedule.lr
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = train_x[idx], targets[idx]
            grads = gradients(net, xb, yb)
            sgd_step(net, grads, lr_used, cfg.momentum)
            loss_sum += loss_value(net, xb, yb) * idx.size
        train_loss = loss_sum / n
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        val_acc = accuracy(net, val_x, val_labels)
        history.append((epoch, train_loss, val_acc, lr_used))
        if val_acc > best_acc:
            best_acc = val_acc
            best = net.copy()
        schedule_update(schedule, val_acc)
    return best, history


def write_history(path: str | Path, history) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_acc", "lr"])
        for epoch, loss, acc, lr in history:
            writer.writerow([epoch, f"{loss:.9g}", f"{acc:.9g}", f"{lr:.9g}"])


def save_net(path: str | Path, net: NetState) -> None:
    payload = {
        "format": "giclassify-net",
        "version": 1,
        "spec": {
            "layer_sizes": list(net.spec.layer_sizes),
            "hidden_activation": net.spec.hidden_activation,
            "output_activation": net.spec.output_activation,
            "loss": net.spec.loss,
        },
        "seed": net.seed,
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_net(path: str | Path) -> NetState:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "giclassify-net":
        raise ValueError(f"{path}: not a network weights file")
    spec = NetSpec(
        tuple(payload["spec"]["layer_sizes"]),
        payload["spec"]["hidden_activation"],
        payload["spec"]["output_activation"],
        payload["spec"]["loss"],
    )
    net = init_net(spec, payload.get("seed", 0))
    for i, (w, b) in enumerate(zip(payload["weights"], payload["biases"])):
        net.weights[i] = np.array(w).reshape(net.weights[i].shape)
        net.biases[i] = np.array(b)
    return net
