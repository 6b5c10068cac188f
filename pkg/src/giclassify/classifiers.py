"""SimpleLogistic and logistic model tree classifiers over feature vectors.

SimpleLogistic is stagewise LogitBoost with one-attribute least-squares
regressions as base learners; the round count is selected by accuracy on an
internal stratified 20% holdout (max 200 rounds) and the model is then
refit on the full training set for that many rounds.

The tree grows by information-gain splits at midpoints, stops below 15
instances or at purity, warm-starts each child's logistic model from the
parent's accumulated scores, and is pruned by CART cost-complexity with
5-fold internal cross-validation. Features are z-score standardized with
training statistics stored in the model, so thresholds are scale-robust.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

Z_MAX = 3.0
_W_FLOOR = 1e-12
_GAIN_FLOOR = 1e-12


@dataclass(frozen=True)
class ClassifierConfig:
    max_iterations: int = 200
    holdout_fraction: float = 0.2
    seed: int = 42
    # Tree parameters.
    min_split: int = 15
    node_iterations: int = 50
    cv_folds: int = 5


@dataclass
class AdditiveScores:
    """Per-class additive score functions: sparse slope terms over
    standardized attributes plus an intercept per class."""
    n_classes: int
    n_attributes: int
    intercepts: np.ndarray                 # (J,)
    terms: list[dict[int, float]]          # per class: attr -> slope
    n_iterations: int = 0

    @classmethod
    def zeros(cls, n_classes: int, n_attributes: int) -> "AdditiveScores":
        return cls(n_classes, n_attributes, np.zeros(n_classes),
                   [dict() for _ in range(n_classes)])

    def copy(self) -> "AdditiveScores":
        return AdditiveScores(self.n_classes, self.n_attributes,
                              self.intercepts.copy(),
                              [dict(t) for t in self.terms],
                              self.n_iterations)

    def dense_weights(self) -> np.ndarray:
        w = np.zeros((self.n_attributes, self.n_classes))
        for j, t in enumerate(self.terms):
            for attr, slope in t.items():
                w[attr, j] = slope
        return w

    def scores(self, xs: np.ndarray) -> np.ndarray:
        return xs @ self.dense_weights() + self.intercepts


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _best_stump(x2: np.ndarray, x: np.ndarray, w: np.ndarray, z: np.ndarray):
    """Weighted one-attribute least squares over every attribute; returns
    (attr, slope, intercept) of the lowest-SSE fit."""
    total = w.sum()
    wz = w * z
    sum_x = w @ x
    sum_x2 = w @ x2
    sum_z = wz.sum()
    sum_xz = wz @ x
    sxx = sum_x2 - sum_x * sum_x / total
    sxz = sum_xz - sum_x * sum_z / total
    szz = float(wz @ z - sum_z * sum_z / total)
    valid = sxx > _W_FLOOR
    slope = np.where(valid, sxz / np.where(valid, sxx, 1.0), 0.0)
    sse = szz - slope * sxz
    sse = np.where(valid, sse, szz)
    attr = int(np.argmin(sse))
    a = float(slope[attr])
    b = float((sum_z - a * sum_x[attr]) / total)
    return attr, a, b


class _Booster:
    """Multinomial LogitBoost over standardized features, accumulating the
    centered per-round contributions into an AdditiveScores model."""

    def __init__(self, xs: np.ndarray, labels: np.ndarray, n_classes: int,
                 model: AdditiveScores | None = None):
        self.xs = xs
        self.x2 = xs * xs
        self.n, self.d = xs.shape
        self.j = n_classes
        self.y = np.zeros((self.n, n_classes))
        self.y[np.arange(self.n), labels] = 1.0
        self.model = model.copy() if model is not None else \
            AdditiveScores.zeros(n_classes, self.d)
        self.f = self.model.scores(xs)

    def round(self) -> list[tuple[int, float, float]]:
        """One boosting round; returns the raw per-class stumps and folds
        their centered combination into the model and scores."""
        p = _softmax(self.f)
        stumps = []
        for j in range(self.j):
            w = np.clip(p[:, j] * (1.0 - p[:, j]), _W_FLOOR, None)
            z = np.clip((self.y[:, j] - p[:, j]) / w, -Z_MAX, Z_MAX)
            stumps.append(_best_stump(self.x2, self.xs, w, z))
        self._apply(stumps)
        return stumps

    def _apply(self, stumps) -> None:
        j = self.j
        g = np.empty((self.n, j))
        for cls, (attr, a, b) in enumerate(stumps):
            g[:, cls] = a * self.xs[:, attr] + b
        self.f += (j - 1) / j * (g - g.mean(axis=1, keepdims=True))
        scale = (j - 1) / j
        mean_b = sum(b for _, _, b in stumps) / j
        for cls in range(j):
            terms = self.model.terms[cls]
            attr, a, b = stumps[cls]
            terms[attr] = terms.get(attr, 0.0) + scale * a
            self.model.intercepts[cls] += scale * (b - mean_b)
            for attr_l, a_l, _ in stumps:
                terms[attr_l] = terms.get(attr_l, 0.0) - scale * a_l / j
        self.model.n_iterations += 1


def apply_stumps_to(xs: np.ndarray, f: np.ndarray, stumps) -> np.ndarray:
    """Replay one round's centered update on another score matrix."""
    j = f.shape[1]
    g = np.empty((xs.shape[0], j))
    for cls, (attr, a, b) in enumerate(stumps):
        g[:, cls] = a * xs[:, attr] + b
    return f + (j - 1) / j * (g - g.mean(axis=1, keepdims=True))


def _stratified_indices(labels: np.ndarray, fraction: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Seeded per-class pick of about `fraction` of the indices."""
    picked = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        take = int(np.floor(fraction * idx.size + 0.5))
        picked.extend(idx[:take].tolist())
    return np.array(sorted(picked), dtype=np.int64)


def _fit_node_model(
    xs: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    base: AdditiveScores | None,
    max_iterations: int,
    holdout_fraction: float,
    rng: np.random.Generator,
) -> tuple[AdditiveScores, float | None]:
    """Boost from `base`, choosing the round count by holdout accuracy
    (ties to the fewest rounds), then refit that many rounds on all rows.
    Returns (model, best holdout accuracy)."""
    hold = _stratified_indices(labels, holdout_fraction, rng)
    mask = np.zeros(labels.size, dtype=bool)
    mask[hold] = True
    if max_iterations == 0 or hold.size == 0 or hold.size == labels.size:
        booster = _Booster(xs, labels, n_classes, base)
        for _ in range(max_iterations):
            booster.round()
        return booster.model, None

    fit_x, fit_y = xs[~mask], labels[~mask]
    hold_x, hold_y = xs[mask], labels[mask]
    booster = _Booster(fit_x, fit_y, n_classes, base)
    f_hold = booster.model.scores(hold_x)
    best_rounds = 0
    best_acc = float((f_hold.argmax(axis=1) == hold_y).mean())
    for m in range(1, max_iterations + 1):
        stumps = booster.round()
        f_hold = apply_stumps_to(hold_x, f_hold, stumps)
        acc = float((f_hold.argmax(axis=1) == hold_y).mean())
        if acc > best_acc:
            best_acc = acc
            best_rounds = m
    final = _Booster(xs, labels, n_classes, base)
    for _ in range(best_rounds):
        final.round()
    return final.model, best_acc


@dataclass
class Standardization:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardization":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)


@dataclass
class SimpleLogisticModel:
    classes: list[str]
    standardization: Standardization
    scores: AdditiveScores
    holdout_accuracy: float | None = None

    @property
    def n_iterations(self) -> int:
        return self.scores.n_iterations

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        xs = self.standardization.apply(np.atleast_2d(x))
        _check_width(xs, self.scores.n_attributes)
        p = _softmax(self.scores.scores(xs))
        return p[0] if np.asarray(x).ndim == 1 else p


@dataclass
class LMTNode:
    model: AdditiveScores
    n: int
    train_errors: int
    attr: int | None = None
    threshold: float | None = None
    left: "LMTNode | None" = None
    right: "LMTNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.attr is None

    def leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.leaves() + self.right.leaves()

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def subtree_errors(self) -> int:
        if self.is_leaf:
            return self.train_errors
        return self.left.subtree_errors() + self.right.subtree_errors()

    def route(self, xs_row: np.ndarray) -> "LMTNode":
        node = self
        while not node.is_leaf:
            node = node.left if xs_row[node.attr] <= node.threshold else node.right
        return node


def _leaf_scores(node: LMTNode, xs: np.ndarray, idx: np.ndarray,
                 out: np.ndarray) -> None:
    if idx.size == 0:
        return
    if node.is_leaf:
        out[idx] = node.model.scores(xs[idx])
        return
    left = xs[idx, node.attr] <= node.threshold
    _leaf_scores(node.left, xs, idx[left], out)
    _leaf_scores(node.right, xs, idx[~left], out)


@dataclass
class LMTModel:
    classes: list[str]
    standardization: Standardization
    root: LMTNode
    # Pruning diagnostics: candidate alphas, their summed CV errors, and
    # the chosen alpha (all None when cross-validation was skipped).
    cv_candidates: list[float] | None = None
    cv_errors: list[int] | None = None
    chosen_alpha: float | None = None

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
        xs = self.standardization.apply(arr)
        _check_width(xs, self.root.model.n_attributes)
        scores = np.empty((xs.shape[0], len(self.classes)))
        _leaf_scores(self.root, xs, np.arange(xs.shape[0]), scores)
        p = _softmax(scores)
        return p[0] if np.asarray(x).ndim == 1 else p


def _check_width(xs: np.ndarray, expected: int) -> None:
    if xs.shape[1] != expected:
        raise ValueError(f"feature vector has {xs.shape[1]} attributes, "
                         f"model expects {expected}")


def _validate_training_input(x: np.ndarray, labels: np.ndarray) -> None:
    if np.isnan(x).any():
        raise ValueError("training features contain NaN")
    if np.unique(labels).size < 2:
        raise ValueError("training data must contain at least 2 classes")


def _encode_labels(y) -> tuple[np.ndarray, list[str]]:
    names = sorted({str(v) for v in y})
    index = {name: i for i, name in enumerate(names)}
    return np.array([index[str(v)] for v in y], dtype=np.int64), names


def train_simple_logistic(x: np.ndarray, y, cfg: ClassifierConfig) -> SimpleLogisticModel:
    x = np.asarray(x, dtype=np.float64)
    labels, names = _encode_labels(y)
    _validate_training_input(x, labels)
    standardization = Standardization.fit(x)
    xs = standardization.apply(x)
    rng = np.random.default_rng(cfg.seed)
    model, best_acc = _fit_node_model(
        xs, labels, len(names), None, cfg.max_iterations,
        cfg.holdout_fraction, rng)
    return SimpleLogisticModel(names, standardization, model, best_acc)


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True)
    p = counts / np.where(totals > 0, totals, 1.0)
    plogp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def find_best_split(xs: np.ndarray, labels: np.ndarray, n_classes: int):
    """Highest information-gain (attribute, midpoint threshold); ties go to
    the lowest attribute index, then the lowest threshold. Returns
    (gain, attr, threshold) or None when no split separates the data."""
    n, d = xs.shape
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    total_counts = onehot.sum(axis=0)
    parent = _entropy(total_counts)
    best = None
    for attr in range(d):
        order = np.argsort(xs[:, attr], kind="stable")
        values = xs[order, attr]
        boundaries = np.flatnonzero(values[1:] > values[:-1])
        if boundaries.size == 0:
            continue
        left_counts = onehot[order].cumsum(axis=0)[boundaries]
        n_left = boundaries + 1.0
        n_right = n - n_left
        gains = (parent
                 - (n_left / n) * _entropy_rows(left_counts)
                 - (n_right / n) * _entropy_rows(total_counts - left_counts))
        k = int(np.argmax(gains))
        gain = float(gains[k])
        if best is None or gain > best[0]:
            threshold = float((values[boundaries[k]] +
                               values[boundaries[k] + 1]) / 2.0)
            best = (gain, attr, threshold)
    if best is None or best[0] <= _GAIN_FLOOR:
        return None
    return best


def _node_errors(model: AdditiveScores, xs: np.ndarray, labels: np.ndarray) -> int:
    pred = model.scores(xs).argmax(axis=1)
    return int((pred != labels).sum())


def _grow_tree(
    xs: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    parent_model: AdditiveScores | None,
    cfg: ClassifierConfig,
    seed_seq: np.random.SeedSequence,
    depth: int,
    max_iterations: int,
) -> LMTNode:
    rng = np.random.default_rng(seed_seq)
    model, _ = _fit_node_model(xs, labels, n_classes, parent_model,
                               max_iterations, cfg.holdout_fraction, rng)
    node = LMTNode(model, xs.shape[0], _node_errors(model, xs, labels))
    if xs.shape[0] < cfg.min_split or np.unique(labels).size == 1:
        return node
    split = find_best_split(xs, labels, n_classes)
    if split is None:
        return node
    _, attr, threshold = split
    mask = xs[:, attr] <= threshold
    child_seeds = seed_seq.spawn(2)
    node.attr = attr
    node.threshold = threshold
    node.left = _grow_tree(xs[mask], labels[mask], n_classes, model, cfg,
                           child_seeds[0], depth + 1, cfg.node_iterations)
    node.right = _grow_tree(xs[~mask], labels[~mask], n_classes, model, cfg,
                            child_seeds[1], depth + 1, cfg.node_iterations)
    return node


def _alpha_sequence(root: LMTNode) -> list[float]:
    """CART weakest-link alphas (error counts, not rates) up to the value
    that collapses the tree to its root."""

    def collect(node, out):
        if not node.is_leaf:
            out.append(node)
            collect(node.left, out)
            collect(node.right, out)
        return out

    work = _clone_structure(root)
    alphas = []
    while not work.is_leaf:
        internals = collect(work, [])
        gs = [(n.train_errors - n.subtree_errors()) / (n.leaves() - 1)
              for n in internals]
        g_min = min(gs)
        alphas.append(max(g_min, 0.0))
        for node, g in zip(internals, gs):
            if g <= g_min + 1e-12:
                node.attr = None
                node.left = None
                node.right = None
    return alphas


def _clone_structure(node: LMTNode) -> LMTNode:
    clone = LMTNode(node.model, node.n, node.train_errors, node.attr,
                    node.threshold)
    if not node.is_leaf:
        clone.left = _clone_structure(node.left)
        clone.right = _clone_structure(node.right)
    return clone


def _prune_at(node: LMTNode, alpha: float) -> LMTNode:
    """Cost-optimal subtree for penalty `alpha` (errors + alpha*leaves).

    Ties keep the split, matching the smallest-alpha preference in the CV
    candidate selection: node models can reach zero training error, so a
    collapse-on-equality rule would erase every split behind a perfect
    root model.
    """
    clone = LMTNode(node.model, node.n, node.train_errors, node.attr,
                    node.threshold)
    if node.is_leaf:
        return clone
    clone.left = _prune_at(node.left, alpha)
    clone.right = _prune_at(node.right, alpha)
    keep_cost = (clone.left.subtree_errors() + clone.right.subtree_errors()
                 + alpha * (clone.left.leaves() + clone.right.leaves()))
    collapse_cost = node.train_errors + alpha
    if collapse_cost < keep_cost:
        clone.attr = None
        clone.left = None
        clone.right = None
    return clone


def _candidate_alphas(alphas: list[float]) -> list[float]:
    if not alphas:
        return [0.0]
    ext = [0.0] + sorted(alphas)
    candidates = [float(np.sqrt(a * b)) if a > 0 else 0.0
                  for a, b in zip(ext[:-1], ext[1:])]
    candidates.append(ext[-1] + 1.0)
    out = []
    for c in candidates:
        if not out or c > out[-1]:
            out.append(c)
    return out


def _tree_predict(node: LMTNode, xs: np.ndarray) -> np.ndarray:
    scores = np.empty((xs.shape[0], node.model.n_classes))
    _leaf_scores(node, xs, np.arange(xs.shape[0]), scores)
    return scores.argmax(axis=1)


def _stratified_folds(labels: np.ndarray, n_folds: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Fold id per row; classes are dealt round-robin after a seeded shuffle."""
    fold = np.zeros(labels.size, dtype=np.int64)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = np.arange(idx.size) % n_folds
    return fold


def train_lmt(x: np.ndarray, y, cfg: ClassifierConfig) -> LMTModel:
    x = np.asarray(x, dtype=np.float64)
    labels, names = _encode_labels(y)
    _validate_training_input(x, labels)
    n_classes = len(names)
    standardization = Standardization.fit(x)
    xs = standardization.apply(x)

    root_seq = np.random.SeedSequence([cfg.seed, 0])
    # The root model must replicate train_simple_logistic exactly, so its
    # rng comes from the plain seed, not the spawned sequence.
    rng = np.random.default_rng(cfg.seed)
    root_model, _ = _fit_node_model(xs, labels, n_classes, None,
                                    cfg.max_iterations, cfg.holdout_fraction,
                                    rng)
    root = LMTNode(root_model, xs.shape[0],
                   _node_errors(root_model, xs, labels))
    if xs.shape[0] >= cfg.min_split and np.unique(labels).size > 1:
        split = find_best_split(xs, labels, n_classes)
        if split is not None:
            _, attr, threshold = split
            mask = xs[:, attr] <= threshold
            kids = root_seq.spawn(2)
            root.attr = attr
            root.threshold = threshold
            root.left = _grow_tree(xs[mask], labels[mask], n_classes,
                                   root_model, cfg, kids[0], 1,
                                   cfg.node_iterations)
            root.right = _grow_tree(xs[~mask], labels[~mask], n_classes,
                                    root_model, cfg, kids[1], 1,
                                    cfg.node_iterations)

    if root.is_leaf:
        return LMTModel(names, standardization, root)

    candidates = _candidate_alphas(_alpha_sequence(root))
    n_folds = min(cfg.cv_folds, xs.shape[0])
    if n_folds >= 2 and len(candidates) > 1:
        fold_rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, 1]))
        folds = _stratified_folds(labels, n_folds, fold_rng)
        cv_errors = np.zeros(len(candidates), dtype=np.int64)
        for f in range(n_folds):
            mask = folds == f
            fold_seq = np.random.SeedSequence([cfg.seed, 2 + f])
            fold_tree = _grow_tree(xs[~mask], labels[~mask], n_classes, None,
                                   cfg, fold_seq, 0, cfg.max_iterations)
            for ci, alpha in enumerate(candidates):
                pruned = _prune_at(fold_tree, alpha)
                pred = _tree_predict(pruned, xs[mask])
                cv_errors[ci] += int((pred != labels[mask]).sum())
        best_alpha = candidates[int(np.argmin(cv_errors))]
        root = _prune_at(root, best_alpha)
        return LMTModel(names, standardization, root, candidates,
                        cv_errors.tolist(), best_alpha)
    return LMTModel(names, standardization, root)


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    """Class probability vector(s) for a trained SL or LMT model."""
    return model.predict_proba(x)


def predict_labels(model, x: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(model.predict_proba(x))
    return p.argmax(axis=1)


# --- model file IO ---------------------------------------------------------

def _scores_payload(scores: AdditiveScores) -> dict:
    return {
        "intercepts": scores.intercepts.tolist(),
        "terms": [sorted((int(a), s) for a, s in t.items())
                  for t in scores.terms],
        "n_iterations": scores.n_iterations,
    }


def _scores_from_payload(payload: dict, n_classes: int,
                         n_attributes: int) -> AdditiveScores:
    scores = AdditiveScores.zeros(n_classes, n_attributes)
    scores.intercepts = np.array(payload["intercepts"])
    scores.terms = [{int(a): float(s) for a, s in t} for t in payload["terms"]]
    scores.n_iterations = int(payload["n_iterations"])
    return scores


def _node_payload(node: LMTNode) -> dict:
    payload = {
        "model": _scores_payload(node.model),
        "n": node.n,
        "train_errors": node.train_errors,
    }
    if not node.is_leaf:
        payload.update(attr=node.attr, threshold=node.threshold,
                       left=_node_payload(node.left),
                       right=_node_payload(node.right))
    return payload


def _node_from_payload(payload: dict, n_classes: int,
                       n_attributes: int) -> LMTNode:
    node = LMTNode(
        _scores_from_payload(payload["model"], n_classes, n_attributes),
        int(payload["n"]), int(payload["train_errors"]))
    if "attr" in payload:
        node.attr = int(payload["attr"])
        node.threshold = float(payload["threshold"])
        node.left = _node_from_payload(payload["left"], n_classes, n_attributes)
        node.right = _node_from_payload(payload["right"], n_classes, n_attributes)
    return node


def save_model(path: str | Path, model) -> None:
    base = {
        "format": "giclassify-model",
        "version": 1,
        "classes": model.classes,
        "mean": model.standardization.mean.tolist(),
        "std": model.standardization.std.tolist(),
    }
    if isinstance(model, SimpleLogisticModel):
        base["kind"] = "simple_logistic"
        base["model"] = _scores_payload(model.scores)
        base["holdout_accuracy"] = model.holdout_accuracy
    elif isinstance(model, LMTModel):
        base["kind"] = "lmt"
        base["tree"] = _node_payload(model.root)
    else:
        raise TypeError(f"cannot save model of type {type(model).__name__}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(base, fh)
        fh.write("\n")


def load_model(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "giclassify-model":
        raise ValueError(f"{path}: not a classifier model file")
    standardization = Standardization(np.array(payload["mean"]),
                                      np.array(payload["std"]))
    classes = list(payload["classes"])
    n_attributes = len(payload["mean"])
    if payload["kind"] == "simple_logistic":
        scores = _scores_from_payload(payload["model"], len(classes),
                                      n_attributes)
        return SimpleLogisticModel(classes, standardization, scores,
                                   payload.get("holdout_accuracy"))
    if payload["kind"] == "lmt":
        root = _node_from_payload(payload["tree"], len(classes), n_attributes)
        return LMTModel(classes, standardization, root)
    raise ValueError(f"{path}: unknown model kind {payload['kind']!r}")
