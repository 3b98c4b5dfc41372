"""Train/test split, classification metrics, and k-fold cross-validation."""

from __future__ import annotations

import math
from decimal import ROUND_HALF_UP, Decimal
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import FeatureMatrix
from .models import ModelSpec, predict, train
from .models._rng import child_rng, derive_seed


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.3
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"split.test_fraction must be in (0, 1), got {self.test_fraction}")


def n_test_rows(n: int, fraction: float) -> int:
    """round(n * fraction), halves rounded up.

    Computed in decimal from the fraction as written, so 0.3 * 15 is 4.5
    (and rounds to 5) rather than the binary 4.4999...
    """
    exact = Decimal(repr(float(fraction))) * n
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def split_indices(labels: Sequence, cfg: SplitConfig) -> tuple[np.ndarray, np.ndarray]:
    n = len(labels)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    n_test = n_test_rows(n, cfg.test_fraction)
    if n_test == 0 or n_test == n:
        raise ValueError(f"test size {n_test} of {n} rows leaves an empty side; adjust split.test_fraction")
    rng = child_rng(cfg.seed, "split")
    if not cfg.stratified:
        perm = rng.permutation(n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])

    # largest-remainder allocation keeps every class within one row of its share
    classes: dict = {}
    for i, lab in enumerate(labels):
        classes.setdefault(lab, []).append(i)
    groups = list(classes.values())
    quotas = [len(g) * n_test / n for g in groups]
    take = [math.floor(q) for q in quotas]
    by_remainder = sorted(range(len(groups)), key=lambda j: (-(quotas[j] - take[j]), j))
    for j in by_remainder[: n_test - sum(take)]:
        take[j] += 1
    test = []
    for g, t in zip(groups, take):
        test.extend(np.asarray(g)[rng.permutation(len(g))[:t]].tolist())
    test = np.sort(np.asarray(test, dtype=np.int64))
    train_idx = np.setdiff1d(np.arange(n), test)
    return train_idx, test


def train_test_split(m: FeatureMatrix, cfg: SplitConfig) -> tuple[FeatureMatrix, FeatureMatrix]:
    tr, te = split_indices(m.labels, cfg)
    return m.subset(tr), m.subset(te)


@dataclass
class Metrics:
    accuracy: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    labels: list
    confusion: np.ndarray  # rows: true, columns: predicted
    support: np.ndarray
    per_class: dict = field(default_factory=dict)
    zero_division: int = 0  # undefined per-class precision/recall values set to 0

    def as_row(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1_weighted": self.f1_weighted,
            "precision_weighted": self.precision_weighted,
            "recall_weighted": self.recall_weighted,
            "f1_macro": self.f1_macro,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "zero_division": self.zero_division,
        }


def compute_metrics(y_true: Sequence, y_pred: Sequence, labels: Sequence | None = None) -> Metrics:
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    if not y_true:
        raise ValueError("cannot score empty label lists")
    if labels is None:
        labels = list(dict.fromkeys(list(y_true) + list(y_pred)))
    pos = {lab: i for i, lab in enumerate(labels)}
    C = len(labels)
    conf = np.zeros((C, C), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        conf[pos[t], pos[p]] += 1
    n = len(y_true)
    tp = np.diag(conf).astype(float)
    support = conf.sum(axis=1)
    predicted = conf.sum(axis=0)
    zero_div = 0
    prec = np.zeros(C)
    rec = np.zeros(C)
    f1 = np.zeros(C)
    for c in range(C):
        if predicted[c]:
            prec[c] = tp[c] / predicted[c]
        else:
            zero_div += 1
        if support[c]:
            rec[c] = tp[c] / support[c]
        else:
            zero_div += 1
        if prec[c] + rec[c] > 0:
            f1[c] = 2 * prec[c] * rec[c] / (prec[c] + rec[c])
    w = support / n
    per_class = {
        lab: {"precision": prec[i], "recall": rec[i], "f1": f1[i], "support": int(support[i])}
        for i, lab in enumerate(labels)
    }
    return Metrics(
        accuracy=float(tp.sum() / n),
        precision_weighted=float(w @ prec),
        recall_weighted=float(w @ rec),
        f1_weighted=float(w @ f1),
        precision_macro=float(prec.mean()),
        recall_macro=float(rec.mean()),
        f1_macro=float(f1.mean()),
        labels=list(labels),
        confusion=conf,
        support=support,
        per_class=per_class,
        zero_division=zero_div,
    )


@dataclass
class CVResult:
    k: int
    fold_scores: list[float]
    mean_score: float
    folds: list[np.ndarray] = field(default_factory=list)


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle once, then cut into k contiguous folds whose sizes differ by at most one."""
    if not 2 <= k <= n:
        raise ValueError(f"k={k} must satisfy 2 <= k <= n={n}")
    perm = child_rng(seed, "folds").permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [perm[bounds[i]:bounds[i + 1]] for i in range(k)]


def kfold_cv(spec: ModelSpec, m: FeatureMatrix, k: int = 5, seed: int = 0) -> CVResult:
    folds = fold_indices(len(m), k, seed)
    scores = []
    for i, test in enumerate(folds):
        train_idx = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        model = train(spec.with_seed(derive_seed(seed, "fold", i, spec.seed)), m.subset(train_idx))
        held = m.subset(np.sort(test))
        pred = predict(model, held)
        scores.append(sum(p == t for p, t in zip(pred, held.labels)) / len(held))
    return CVResult(k, scores, math.fsum(scores) / k, folds)
