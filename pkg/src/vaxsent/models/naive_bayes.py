"""Gaussian, multinomial, complement and Bernoulli naive Bayes.

Each ``fit_*`` returns a dict of arrays; ``scores_*`` returns the (n, C)
joint log-likelihood whose argmax is the prediction.
"""

import numpy as np
import scipy.sparse as sp

DENSE_BUDGET = 50_000_000  # floats per densified batch


def _onehot(y, n_classes) -> sp.csr_matrix:
    n = len(y)
    return sp.csr_matrix((np.ones(n), (np.arange(n), y)), shape=(n, n_classes))


def _log_prior(y, n_classes) -> np.ndarray:
    counts = np.bincount(y, minlength=n_classes).astype(float)
    with np.errstate(divide="ignore"):
        return np.log(counts / counts.sum())


def _feature_counts(X, y, n_classes) -> np.ndarray:
    return np.asarray((_onehot(y, n_classes).T @ X).todense())


def fit_multinomial(X, y, n_classes, params, rng=None):
    alpha = params["alpha"]
    fc = _feature_counts(X, y, n_classes)
    V = X.shape[1]
    loglik = np.log(fc + alpha) - np.log(fc.sum(axis=1, keepdims=True) + alpha * V)
    return {"log_prior": _log_prior(y, n_classes), "feature_log_prob": loglik}


def scores_multinomial(state, X):
    return np.asarray(X @ state["feature_log_prob"].T) + state["log_prior"]


def fit_complement(X, y, n_classes, params, rng=None):
    alpha = params["alpha"]
    fc = _feature_counts(X, y, n_classes)
    comp = np.asarray(X.sum(axis=0)).ravel()[None, :] - fc
    V = X.shape[1]
    w = np.log(alpha + comp) - np.log(alpha * V + comp.sum(axis=1, keepdims=True))
    return {"log_prior": _log_prior(y, n_classes), "weights": w}


def scores_complement(state, X):
    # complement weights are used negatively: argmax(-x.w) == argmin(x.w)
    s = -np.asarray(X @ state["weights"].T)
    if s.shape[1] == 1:
        s = s + state["log_prior"]
    return s


def fit_bernoulli(X, y, n_classes, params, rng=None):
    alpha = params["alpha"]
    Xb = _binarize(X, params["binarize"])
    fc = _feature_counts(Xb, y, n_classes)
    n_c = np.bincount(y, minlength=n_classes).astype(float)
    p = (fc + alpha) / (n_c[:, None] + 2.0 * alpha)
    return {
        "log_prior": _log_prior(y, n_classes),
        "log_p": np.log(p),
        "log_1mp": np.log1p(-p),
        "binarize": np.asarray([params["binarize"]], dtype=float),
    }


def _binarize(X, threshold) -> sp.csr_matrix:
    X = sp.csr_matrix(X)
    if threshold < 0:
        raise ValueError("binarize threshold must be >= 0 for sparse input")
    out = X.copy()
    out.data = (out.data > threshold).astype(float)
    out.eliminate_zeros()
    return out


def scores_bernoulli(state, X):
    Xb = _binarize(X, state["binarize"][0])
    delta = state["log_p"] - state["log_1mp"]
    return np.asarray(Xb @ delta.T) + state["log_1mp"].sum(axis=1) + state["log_prior"]


def _batches(X, row_cap):
    rows = max(1, min(int(row_cap), DENSE_BUDGET // max(1, X.shape[1])))
    for start in range(0, X.shape[0], rows):
        stop = min(start + rows, X.shape[0])
        yield start, stop, X[start:stop].toarray()


def fit_gaussian(X, y, n_classes, params, rng=None):
    """Per-class mean and variance on densified batches, plus the variance floor."""
    X = sp.csr_matrix(X)
    n, V = X.shape
    cap = params["row_cap"]
    n_c = np.bincount(y, minlength=n_classes).astype(float)
    sums = np.zeros((n_classes, V))
    total = np.zeros(V)
    for a, b, D in _batches(X, cap):
        np.add.at(sums, y[a:b], D)
        total += D.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / n_c[:, None]
    means[n_c == 0] = 0.0
    grand = total / n
    sq = np.zeros((n_classes, V))
    grand_sq = np.zeros(V)
    for a, b, D in _batches(X, cap):
        np.add.at(sq, y[a:b], (D - means[y[a:b]]) ** 2)
        grand_sq += ((D - grand) ** 2).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        var = sq / n_c[:, None]
    var[n_c == 0] = 1.0
    epsilon = params["var_smoothing"] * (grand_sq / n).max()
    if epsilon == 0:
        epsilon = params["var_smoothing"]  # every feature constant
    return {
        "log_prior": _log_prior(y, n_classes),
        "theta": means,
        "var": var + epsilon,
        "row_cap": np.asarray([cap], dtype=np.int64),
    }


def scores_gaussian(state, X):
    X = sp.csr_matrix(X)
    theta, var = state["theta"], state["var"]
    const = -0.5 * np.log(2.0 * np.pi * var).sum(axis=1) + state["log_prior"]
    out = np.empty((X.shape[0], theta.shape[0]))
    for a, b, D in _batches(X, int(state["row_cap"][0])):
        for c in range(theta.shape[0]):
            out[a:b, c] = const[c] - 0.5 * (((D - theta[c]) ** 2) / var[c]).sum(axis=1)
    return out


FIT = {
    "GaussianNB": fit_gaussian,
    "MultinomialNB": fit_multinomial,
    "ComplementNB": fit_complement,
    "BernoulliNB": fit_bernoulli,
}

SCORES = {
    "GaussianNB": scores_gaussian,
    "MultinomialNB": scores_multinomial,
    "ComplementNB": scores_complement,
    "BernoulliNB": scores_bernoulli,
}
