"""k-nearest neighbours by Euclidean distance over sparse rows."""

import numpy as np
import scipy.sparse as sp

BLOCK = 512


def _row_sq_norms(X) -> np.ndarray:
    return np.asarray(X.multiply(X).sum(axis=1)).ravel()


def _exact_sq(Xtrain, cand: np.ndarray, q_dense: np.ndarray) -> np.ndarray:
    diff = Xtrain[cand].toarray() - q_dense
    return np.einsum("ij,ij->i", diff, diff)


def neighbors_block(Xtrain, train_sq: np.ndarray, Q, k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """k nearest training rows for every row of ``Q``.

    Squared distances come from the expansion |x|^2 + |q|^2 - 2 x.q; the
    shortlist around the k-th value is then rescored exactly so that ties
    resolve by training index and identical points report distance 0.
    """
    n = Xtrain.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be between 1 and the training size {n}")
    out = []
    q_sq = _row_sq_norms(Q)
    for start in range(0, Q.shape[0], BLOCK):
        stop = min(start + BLOCK, Q.shape[0])
        cross = np.asarray((Q[start:stop] @ Xtrain.T).todense())
        d2 = np.maximum(train_sq[None, :] + q_sq[start:stop, None] - 2.0 * cross, 0.0)
        for r in range(stop - start):
            row = d2[r]
            kth = np.partition(row, k - 1)[k - 1]
            slack = 1e-9 * (1.0 + kth + q_sq[start + r])
            cand = np.flatnonzero(row <= kth + slack)
            exact = _exact_sq(Xtrain, cand, Q[start + r].toarray().ravel())
            order = np.lexsort((cand, exact))[:k]
            out.append((cand[order], np.sqrt(exact[order])))
    return out


def fit(X, y, n_classes, params, rng):
    X = sp.csr_matrix(X)
    if params["k"] > X.shape[0]:
        raise ValueError(f"k={params['k']} exceeds the training size {X.shape[0]}")
    return {
        "data": X.data.copy(),
        "indices": X.indices.astype(np.int64),
        "indptr": X.indptr.astype(np.int64),
        "shape": np.asarray(X.shape, dtype=np.int64),
        "y": np.asarray(y, dtype=np.int64),
    }


def training_matrix(state) -> sp.csr_matrix:
    return sp.csr_matrix((state["data"], state["indices"], state["indptr"]), shape=tuple(state["shape"]))


def predict(state, X, n_classes, params) -> np.ndarray:
    Xtrain = training_matrix(state)
    y = state["y"]
    hits = neighbors_block(Xtrain, _row_sq_norms(Xtrain), sp.csr_matrix(X), params["k"])
    out = np.empty(len(hits), dtype=np.int64)
    for i, (idx, _) in enumerate(hits):
        out[i] = np.argmax(np.bincount(y[idx], minlength=n_classes))
    return out
