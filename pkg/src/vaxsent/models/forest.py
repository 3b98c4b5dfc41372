"""CART trees with Gini splits, bagged into a majority-vote forest."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
import scipy.sparse as sp

DENSE_LIMIT = 4_000_000  # densify the bootstrap sample when n * V stays under this
TIE_TOL = 1e-12


def gini_impurity(labels) -> float:
    labels = list(labels)
    if not labels:
        raise ValueError("gini impurity of an empty multiset")
    n = len(labels)
    return 1.0 - math.fsum((c / n) ** 2 for c in Counter(labels).values())


def n_candidate_features(max_features, V: int) -> int:
    if max_features in (None, "all"):
        return V
    if max_features == "sqrt":
        return max(1, int(math.sqrt(V)))
    return max(1, min(V, int(max_features)))


class _Rows:
    """Node-level access to a training sample, dense or sparse."""

    def __init__(self, X):
        if sp.issparse(X):
            X = sp.csr_matrix(X)
            X.eliminate_zeros()
            if X.shape[0] * X.shape[1] <= DENSE_LIMIT:
                X = X.toarray()
        self.X = X
        self.dense = not sp.issparse(X)

    def nonconstant(self, S) -> np.ndarray:
        if self.dense:
            Xn = self.X[S]
            return np.flatnonzero(Xn.min(axis=0) != Xn.max(axis=0))
        csc = self.X[S].tocsc()
        nnz = np.diff(csc.indptr)
        mixed = (nnz > 0) & (nnz < len(S))
        full = np.flatnonzero(nnz == len(S))
        if full.size:
            starts = csc.indptr[:-1][nnz > 0]
            lo = np.minimum.reduceat(csc.data, starts)
            hi = np.maximum.reduceat(csc.data, starts)
            pos = np.searchsorted(np.flatnonzero(nnz > 0), full)
            mixed[full[lo[pos] != hi[pos]]] = True
        return np.flatnonzero(mixed)

    def columns(self, S, cols) -> np.ndarray:
        if self.dense:
            return self.X[np.ix_(S, cols)]
        return self.X[S][:, cols].toarray()


def _best_split(D: np.ndarray, ys: np.ndarray, cols: np.ndarray, n_classes: int):
    """Lowest weighted Gini over candidate columns; ties -> lowest feature, then threshold.

    Minimizing weighted Gini is maximizing sum_c L_c^2/n_L + sum_c R_c^2/n_R.
    """
    n, m = D.shape
    order = np.argsort(D, axis=0, kind="stable")
    vals = np.take_along_axis(D, order, axis=0)
    onehot = np.eye(n_classes)[ys]
    left = np.cumsum(onehot[order], axis=0)[:-1]  # (n-1, m, C)
    total = onehot.sum(axis=0)
    right = total - left
    n_left = np.arange(1, n, dtype=float)[:, None]
    score = (left ** 2).sum(axis=2) / n_left + (right ** 2).sum(axis=2) / (n - n_left)
    valid = vals[:-1] < vals[1:]
    score = np.where(valid, score, -np.inf)
    best = score.max()
    if not np.isfinite(best):
        return None
    pos, col = np.nonzero(score >= best - TIE_TOL * abs(best))
    thresholds = (vals[pos, col] + vals[pos + 1, col]) / 2.0
    thresholds = np.where(thresholds >= vals[pos + 1, col], vals[pos, col], thresholds)
    feats = cols[col]
    pick = np.lexsort((thresholds, feats))[0]
    return int(feats[pick]), float(thresholds[pick])


def grow_tree(X, y: np.ndarray, n_classes: int, max_features, rng) -> dict:
    """Grow to purity (or < 2 samples, or nothing left to split on).

    At each node a random subset of ``max_features`` features is drawn from
    the features that are non-constant on that node's samples.
    """
    rows = _Rows(X)
    y = np.asarray(y, dtype=np.int64)
    V = X.shape[1]
    m = n_candidate_features(max_features, V)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(S):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(int(np.argmax(np.bincount(y[S], minlength=n_classes))))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, S = stack.pop()
        if len(S) < 2 or np.all(y[S] == y[S[0]]):
            continue
        nonconst = rows.nonconstant(S)
        if nonconst.size == 0:
            continue
        cols = nonconst if m >= nonconst.size else np.sort(rng.permutation(nonconst)[:m])
        split = _best_split(rows.columns(S, cols), y[S], cols, n_classes)
        if split is None:
            continue
        f, thr = split
        go_left = rows.columns(S, np.asarray([f]))[:, 0] <= thr
        SL, SR = S[go_left], S[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(SL)
        right[node] = new_node(SR)
        stack.append((right[node], SR))
        stack.append((left[node], SL))
    return {
        "feature": np.asarray(feature, dtype=np.int64),
        "threshold": np.asarray(threshold, dtype=float),
        "left": np.asarray(left, dtype=np.int64),
        "right": np.asarray(right, dtype=np.int64),
        "value": np.asarray(value, dtype=np.int64),
    }


def _feature_values(X, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X[rows, cols]).ravel()
    return X[rows, cols]


def tree_predict(tree: dict, X) -> np.ndarray:
    """Class index reached by each row."""
    X = sp.csr_matrix(X) if sp.issparse(X) else np.asarray(X)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = np.flatnonzero(tree["feature"][node] >= 0)
    while active.size:
        f = tree["feature"][node[active]]
        x = _feature_values(X, active, f)
        go_left = x <= tree["threshold"][node[active]]
        node[active] = np.where(go_left, tree["left"][node[active]], tree["right"][node[active]])
        active = active[tree["feature"][node[active]] >= 0]
    return tree["value"][node]


def fit(X, y, n_classes, params, rng_factory):
    """``rng_factory(t)`` returns the generator for tree ``t``."""
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    X = sp.csr_matrix(X)
    trees = []
    for t in range(params["n_estimators"]):
        rng = rng_factory(t)
        if params["bootstrap"]:
            idx = rng.integers(0, n, size=n)
            trees.append(grow_tree(X[idx], y[idx], n_classes, params["max_features"], rng))
        else:
            trees.append(grow_tree(X, y, n_classes, params["max_features"], rng))
    return pack(trees)


def pack(trees: list[dict]) -> dict:
    sizes = [len(t["feature"]) for t in trees]
    state = {"tree_ptr": np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)}
    for key in ("feature", "threshold", "left", "right", "value"):
        state[key] = np.concatenate([t[key] for t in trees])
    return state


def unpack(state: dict) -> list[dict]:
    ptr = state["tree_ptr"]
    return [
        {k: state[k][ptr[i]:ptr[i + 1]] for k in ("feature", "threshold", "left", "right", "value")}
        for i in range(len(ptr) - 1)
    ]


def per_tree_predictions(state, X) -> np.ndarray:
    """(n_rows, n_trees) matrix of class indices."""
    X = sp.csr_matrix(X)
    if X.shape[0] * X.shape[1] <= DENSE_LIMIT:
        X = X.toarray()
    return np.stack([tree_predict(t, X) for t in unpack(state)], axis=1)


def vote(per_tree: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.zeros((per_tree.shape[0], n_classes), dtype=np.int64)
    for j in range(per_tree.shape[1]):
        counts[np.arange(per_tree.shape[0]), per_tree[:, j]] += 1
    return np.argmax(counts, axis=1)
