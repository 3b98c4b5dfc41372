"""One-vs-rest linear classifiers: hinge loss + L2, Pegasos-style 1/(lambda t) steps.

The bias rides along as a constant feature, so it is regularized together
with the weights. For one binary problem with augmented vector u = [w, b]:

    f(u) = lambda/2 * |u|^2 + mean_i max(0, 1 - y_i * u.[x_i, 1])
"""

import numpy as np
import scipy.sparse as sp

RESCALE_BELOW = 1e-6


def _augment(X) -> sp.csr_matrix:
    X = sp.csr_matrix(X)
    return sp.hstack([X, np.ones((X.shape[0], 1))], format="csr")


def hinge_objective(u: np.ndarray, X, y: np.ndarray, lam: float) -> float:
    margins = y * (_augment(X) @ u)
    return 0.5 * lam * float(u @ u) + float(np.maximum(0.0, 1.0 - margins).mean())


def hinge_subgradient(u: np.ndarray, X, y: np.ndarray, lam: float) -> np.ndarray:
    """Subgradient of ``hinge_objective``; exact gradient wherever no margin equals 1."""
    Xa = _augment(X)
    viol = (y * (Xa @ u)) < 1.0
    g = lam * u
    if viol.any():
        g = g - np.asarray(Xa[viol].T @ y[viol]).ravel() / Xa.shape[0]
    return g


def fit(X, y, n_classes, params, rng):
    """Train all C one-vs-rest problems jointly over one shuffled stream.

    Each step applies, per class, u <- u - eta_t * subgradient on the single
    sample (eta_t = 1 / (lambda t)). U is kept as scale * V so the shrink is O(1).
    """
    lam = float(params["lam"])
    epochs = int(params["epochs"])
    Xa = _augment(X)
    n, d = Xa.shape
    Y = np.where(np.asarray(y)[:, None] == np.arange(n_classes)[None, :], 1.0, -1.0)
    V = np.zeros((n_classes, d))
    scale = 1.0
    t = 0
    indptr, indices, data = Xa.indptr, Xa.indices, Xa.data
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            idx = indices[indptr[i]:indptr[i + 1]]
            val = data[indptr[i]:indptr[i + 1]]
            yi = Y[i]
            viol = yi * (scale * (V[:, idx] @ val)) < 1.0
            shrink = 1.0 - eta * lam
            if shrink <= 0.0:
                V[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if viol.any():
                rows = np.flatnonzero(viol)
                V[np.ix_(rows, idx)] += np.outer(eta * yi[rows] / scale, val)
            if scale < RESCALE_BELOW:
                V *= scale
                scale = 1.0
    U = scale * V
    return {"coef": U[:, :-1].copy(), "intercept": U[:, -1].copy()}


def scores(state, X) -> np.ndarray:
    return np.asarray(sp.csr_matrix(X) @ state["coef"].T) + state["intercept"]
