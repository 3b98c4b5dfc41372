"""Classifier families over sparse feature matrices with 7-class sentiment labels.

``train`` and ``predict`` dispatch on ``ModelSpec.family``. Fitted state is a
flat dict of numpy arrays, which keeps persistence trivial.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp

from ..annotate import SentimentLabel
from ..features import FeatureMatrix, SparseVector
from . import forest, knn, linear, naive_bayes
from ._rng import child_rng, derive_seed
from .forest import gini_impurity

FORMAT_VERSION = 1

FAMILIES = (
    "KNN",
    "GaussianNB",
    "MultinomialNB",
    "ComplementNB",
    "BernoulliNB",
    "LinearSVM",
    "RandomForest",
    "SGDClassifier",
)
NB_FAMILIES = ("GaussianNB", "MultinomialNB", "ComplementNB", "BernoulliNB")
LINEAR_FAMILIES = ("LinearSVM", "SGDClassifier")
NEEDS_TWO_CLASSES = LINEAR_FAMILIES + ("RandomForest",)

DEFAULTS: dict[str, dict[str, Any]] = {
    "KNN": {"k": 5},
    "GaussianNB": {"var_smoothing": 1e-9, "row_cap": 20_000},
    "MultinomialNB": {"alpha": 1.0},
    "ComplementNB": {"alpha": 1.0},
    "BernoulliNB": {"alpha": 1.0, "binarize": 0.0},
    "LinearSVM": {"lam": 1e-4, "epochs": 20},
    "SGDClassifier": {"lam": 1e-4, "epochs": 20},
    "RandomForest": {"n_estimators": 20, "max_features": "sqrt", "bootstrap": True},
}


class ModelError(ValueError):
    pass


def _check_params(family: str, p: dict):
    def positive_int(key):
        v = p[key]
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
            raise ModelError(f"{family}.{key} must be a positive integer, got {v!r}")

    def positive(key):
        if not p[key] > 0:
            raise ModelError(f"{family}.{key} must be > 0, got {p[key]!r}")

    if family == "KNN":
        positive_int("k")
    elif family == "GaussianNB":
        positive("var_smoothing")
        positive_int("row_cap")
    elif family in ("MultinomialNB", "ComplementNB"):
        positive("alpha")
    elif family == "BernoulliNB":
        positive("alpha")
        if p["binarize"] < 0:
            raise ModelError("BernoulliNB.binarize must be >= 0")
    elif family in LINEAR_FAMILIES:
        positive("lam")
        positive_int("epochs")
    elif family == "RandomForest":
        positive_int("n_estimators")
        mf = p["max_features"]
        if mf not in ("sqrt", "all", None) and not (isinstance(mf, int) and mf >= 1):
            raise ModelError(f"RandomForest.max_features must be 'sqrt', 'all' or a positive int, got {mf!r}")
        if not isinstance(p["bootstrap"], bool):
            raise ModelError("RandomForest.bootstrap must be a boolean")


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ModelError(f"unknown model family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        unknown = set(self.params) - set(DEFAULTS[self.family])
        if unknown:
            raise ModelError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        merged = {**DEFAULTS[self.family], **self.params}
        _check_params(self.family, merged)
        object.__setattr__(self, "params", merged)
        if not 0 <= int(self.seed) < 2**64:
            raise ModelError("seed must be a 64-bit unsigned integer")

    @property
    def key(self) -> str:
        """Short stable identifier, e.g. ``KNN-k5`` or ``RandomForest-n40``."""
        p = self.params
        if self.family == "KNN":
            return f"KNN-k{p['k']}"
        if self.family == "RandomForest":
            return f"RandomForest-n{p['n_estimators']}"
        return self.family

    @property
    def model_name(self) -> str:
        if self.family in NB_FAMILIES:
            return "Naive Bayes"
        return {
            "KNN": "KNN",
            "LinearSVM": "Support Vector Machine",
            "RandomForest": "Random Forest",
            "SGDClassifier": "Stochastic Gradient Descent",
        }[self.family]

    @property
    def parameter_text(self) -> str:
        p = self.params
        if self.family == "KNN":
            return f"{p['k']} neighbors"
        if self.family == "RandomForest":
            return f"{p['n_estimators']} estimators"
        if self.family == "LinearSVM":
            return "Linear"
        if self.family == "SGDClassifier":
            return "N/A"
        return self.family[: -len("NB")]

    @property
    def parametric(self) -> bool:
        return self.family in NB_FAMILIES or self.family == "SGDClassifier"

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, seed=int(seed) & (2**64 - 1))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["family"], dict(d.get("params", {})), int(d.get("seed", 0)))


def default_grid() -> list[ModelSpec]:
    """The per-vectorizer rows of the two results tables, in table order."""
    nonparametric = [ModelSpec("KNN", {"k": k}) for k in (5, 10, 15, 20)]
    nonparametric.append(ModelSpec("LinearSVM"))
    nonparametric += [ModelSpec("RandomForest", {"n_estimators": n}) for n in (20, 40, 60)]
    parametric = [ModelSpec(f) for f in NB_FAMILIES] + [ModelSpec("SGDClassifier")]
    return nonparametric + parametric


@dataclass
class TrainedModel:
    spec: ModelSpec
    class_list: list
    state: dict[str, np.ndarray]
    n_features: int

    @property
    def n_classes(self) -> int:
        return len(self.class_list)


def _as_matrix(m) -> sp.csr_matrix:
    if isinstance(m, FeatureMatrix):
        return m.X
    if isinstance(m, SparseVector):
        return FeatureMatrix.from_rows([m], [None]).X
    if sp.issparse(m):
        return sp.csr_matrix(m, dtype=float)
    return sp.csr_matrix(np.atleast_2d(np.asarray(m, dtype=float)))


def _class_index(labels: Sequence) -> tuple[list, np.ndarray]:
    """Classes in order of first appearance, and each label's index."""
    class_list: list = []
    pos: dict = {}
    y = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab not in pos:
            pos[lab] = len(class_list)
            class_list.append(lab)
        y[i] = pos[lab]
    return class_list, y


def train(spec: ModelSpec, m: FeatureMatrix, labels: Sequence | None = None) -> TrainedModel:
    X = _as_matrix(m)
    labels = list(m.labels) if labels is None else list(labels)
    if X.shape[0] == 0:
        raise ModelError("cannot train on an empty feature matrix")
    if len(labels) != X.shape[0]:
        raise ModelError(f"{X.shape[0]} rows but {len(labels)} labels")
    class_list, y = _class_index(labels)
    if len(class_list) < 2 and spec.family in NEEDS_TWO_CLASSES:
        raise ModelError(f"{spec.family} needs at least two distinct labels, got {class_list}")
    if spec.family == "KNN" and spec.params["k"] > X.shape[0]:
        raise ModelError(f"KNN k={spec.params['k']} exceeds the {X.shape[0]} training rows")
    C = len(class_list)
    fam = spec.family
    if fam == "KNN":
        state = knn.fit(X, y, C, spec.params, None)
    elif fam in NB_FAMILIES:
        state = naive_bayes.FIT[fam](X, y, C, spec.params)
    elif fam in LINEAR_FAMILIES:
        state = linear.fit(X, y, C, spec.params, child_rng(spec.seed, fam, "shuffle"))
    else:
        state = forest.fit(X, y, C, spec.params, lambda t: child_rng(spec.seed, fam, "tree", t))
    return TrainedModel(spec, class_list, state, X.shape[1])


def _checked(model: TrainedModel, m) -> sp.csr_matrix:
    X = _as_matrix(m)
    if X.shape[1] != model.n_features:
        raise ModelError(f"dimension mismatch: model has {model.n_features} features, input has {X.shape[1]}")
    return X


def decision_scores(model: TrainedModel, m) -> np.ndarray:
    """(n, C) per-class scores for NB (joint log-likelihood) and linear models."""
    X = _checked(model, m)
    fam = model.spec.family
    if fam in NB_FAMILIES:
        return naive_bayes.SCORES[fam](model.state, X)
    if fam in LINEAR_FAMILIES:
        return linear.scores(model.state, X)
    raise ModelError(f"{fam} has no per-class scores")


def predict_indices(model: TrainedModel, m) -> np.ndarray:
    X = _checked(model, m)
    fam = model.spec.family
    if fam == "KNN":
        return knn.predict(model.state, X, model.n_classes, model.spec.params)
    if fam == "RandomForest":
        return forest.vote(forest.per_tree_predictions(model.state, X), model.n_classes)
    return np.argmax(decision_scores(model, X), axis=1)


def predict(model: TrainedModel, m) -> list:
    return [model.class_list[i] for i in predict_indices(model, m)]


def tree_votes(model: TrainedModel, m) -> list[list]:
    """Per-row list of each tree's predicted label (random forest only)."""
    if model.spec.family != "RandomForest":
        raise ModelError("tree_votes is only defined for RandomForest")
    per = forest.per_tree_predictions(model.state, _checked(model, m))
    return [[model.class_list[i] for i in row] for row in per]


def knn_neighbors(model: TrainedModel, query, k: int) -> list[tuple[int, float]]:
    if model.spec.family != "KNN":
        raise ModelError("knn_neighbors needs a KNN model")
    Xtrain = knn.training_matrix(model.state)
    if not 1 <= k <= Xtrain.shape[0]:
        raise ModelError(f"k={k} must be between 1 and the training size {Xtrain.shape[0]}")
    q = _checked(model, query)
    (idx, dist), = knn.neighbors_block(Xtrain, knn._row_sq_norms(Xtrain), q[:1], k)
    return [(int(i), float(d)) for i, d in zip(idx, dist)]


# -- persistence ---------------------------------------------------------------

_EPOCH = (1980, 1, 1, 0, 0, 0)


def _label_to_json(lab):
    if isinstance(lab, SentimentLabel):
        return {"sentiment": lab.value}
    if isinstance(lab, (str, int, float, bool)):
        return lab
    raise ModelError(f"cannot persist label {lab!r}")


def _label_from_json(v):
    if isinstance(v, dict):
        return SentimentLabel(v["sentiment"])
    return v


def dumps_model(model: TrainedModel) -> bytes:
    """Zip container: meta.json plus one .npy per state array. Byte-stable."""
    meta = {
        "format": "vaxsent-model",
        "version": FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "class_list": [_label_to_json(c) for c in model.class_list],
        "n_features": model.n_features,
        "arrays": sorted(model.state),
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=_EPOCH)
        zf.writestr(info, json.dumps(meta, sort_keys=True, indent=1), compress_type=zipfile.ZIP_DEFLATED)
        for name in sorted(model.state):
            arr = io.BytesIO()
            np.save(arr, np.ascontiguousarray(model.state[name]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            zf.writestr(info, arr.getvalue(), compress_type=zipfile.ZIP_DEFLATED)
    return buf.getvalue()


def loads_model(blob: bytes) -> TrainedModel:
    try:
        with zipfile.ZipFile(io.BytesIO(blob)) as zf:
            meta = json.loads(zf.read("meta.json"))
            if not isinstance(meta, dict) or meta.get("format") != "vaxsent-model":
                raise ModelError("not a vaxsent model container")
            if meta.get("version") != FORMAT_VERSION:
                raise ModelError(f"unsupported model format version {meta.get('version')}")
            state = {name: np.load(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
                     for name in meta["arrays"]}
    except (zipfile.BadZipFile, KeyError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"corrupt model container: {exc}") from exc
    return TrainedModel(
        ModelSpec.from_dict(meta["spec"]),
        [_label_from_json(c) for c in meta["class_list"]],
        state,
        int(meta["n_features"]),
    )


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_bytes(dumps_model(model))


def load_model(path) -> TrainedModel:
    return loads_model(Path(path).read_bytes())


__all__ = [
    "FAMILIES", "ModelError", "ModelSpec", "TrainedModel", "decision_scores", "default_grid",
    "derive_seed", "gini_impurity", "knn_neighbors", "load_model", "predict", "predict_indices",
    "save_model", "train", "tree_votes",
]
