import math

import numpy as np
import pytest
import scipy.sparse as sp

from vaxsent.annotate import SentimentLabel
from vaxsent.features import FeatureMatrix, SparseVector
from vaxsent.models import (DEFAULTS, FAMILIES, ModelError, ModelSpec, TrainedModel, decision_scores, default_grid,
                            dumps_model, gini_impurity, knn_neighbors, load_model, loads_model, predict, save_model,
                            train, tree_votes)
from vaxsent.models import forest
from vaxsent.models._rng import child_rng, derive_seed

L = SentimentLabel


def random_matrix(seed, n=40, V=12, classes=("A", "B", "C")):
    rng = np.random.default_rng(seed)
    X = sp.random(n, V, density=0.4, random_state=rng, data_rvs=lambda k: rng.integers(1, 4, size=k)).tocsr()
    y = [classes[i] for i in rng.integers(0, len(classes), size=n)]
    return FeatureMatrix(X, y)


# -- specs ---------------------------------------------------------------------------

def test_spec_defaults_and_validation():
    assert ModelSpec("KNN").params == {"k": 5}
    assert ModelSpec("LinearSVM").params == {"lam": 1e-4, "epochs": 20}
    assert ModelSpec("GaussianNB").params["var_smoothing"] == 1e-9
    assert ModelSpec("BernoulliNB").params["binarize"] == 0.0
    for fam, bad in [("KNN", {"k": 0}), ("MultinomialNB", {"alpha": 0}), ("LinearSVM", {"epochs": 0}),
                     ("RandomForest", {"max_features": "log2"}), ("KNN", {"neighbours": 3})]:
        with pytest.raises(ModelError):
            ModelSpec(fam, bad)
    with pytest.raises(ModelError):
        ModelSpec("XGBoost")
    assert set(DEFAULTS) == set(FAMILIES)


def test_default_grid_matches_table_rows():
    grid = default_grid()
    assert len(grid) == 13
    assert [s.parameter_text for s in grid if not s.parametric] == [
        "5 neighbors", "10 neighbors", "15 neighbors", "20 neighbors", "Linear",
        "20 estimators", "40 estimators", "60 estimators"]
    assert [s.parameter_text for s in grid if s.parametric] == [
        "Gaussian", "Multinomial", "Complement", "Bernoulli", "N/A"]
    assert len({s.key for s in grid}) == 13


def test_spec_dict_round_trip():
    s = ModelSpec("RandomForest", {"n_estimators": 40}, seed=2**64 - 1)
    assert ModelSpec.from_dict(s.to_dict()) == s


def test_seed_streams():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert derive_seed(1, "a", 2) != derive_seed(1, "a", 3)
    assert derive_seed(1, "a", 2**63 + 5) != derive_seed(1, "a", 5)
    a = child_rng(9, "tree", 0).integers(0, 1000, size=5)
    assert (a == child_rng(9, "tree", 0).integers(0, 1000, size=5)).all()


# -- generic training contract ---------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_trains_and_predicts_members(family):
    m = random_matrix(1)
    model = train(ModelSpec(family, seed=3), m)
    assert model.class_list == list(dict.fromkeys(m.labels))
    pred = predict(model, m)
    assert len(pred) == len(m) and set(pred) <= set(model.class_list)


@pytest.mark.parametrize("family", FAMILIES)
def test_determinism_and_persistence(family, tmp_path):
    m = random_matrix(2)
    a = train(ModelSpec(family, seed=11), m)
    b = train(ModelSpec(family, seed=11), m)
    assert dumps_model(a) == dumps_model(b)
    save_model(a, tmp_path / "m.vxm")
    loaded = load_model(tmp_path / "m.vxm")
    assert loaded.spec == a.spec and loaded.class_list == a.class_list
    assert predict(loaded, m) == predict(a, m)


def test_sentiment_labels_persist(tmp_path):
    m = FeatureMatrix(np.eye(3), [L.Neutral, L.Positive, L.Neutral])
    model = train(ModelSpec("MultinomialNB"), m)
    assert loads_model(dumps_model(model)).class_list == [L.Neutral, L.Positive]


def test_bad_container_rejected():
    import io
    import json
    import zipfile

    def container(meta):
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            zf.writestr("meta.json", json.dumps(meta))
        return buf.getvalue()

    with pytest.raises(ModelError, match="not a vaxsent"):
        loads_model(container({"format": "other"}))
    with pytest.raises(ModelError, match="version"):
        loads_model(container({"format": "vaxsent-model", "version": 99}))
    with pytest.raises(ModelError, match="corrupt"):
        loads_model(b"definitely not a zip")


def test_errors():
    m = FeatureMatrix(np.eye(3), ["A", "A", "A"])
    for fam in ("LinearSVM", "SGDClassifier", "RandomForest"):
        with pytest.raises(ModelError, match="two distinct"):
            train(ModelSpec(fam), m)
    with pytest.raises(ModelError):
        train(ModelSpec("MultinomialNB"), FeatureMatrix(np.zeros((0, 3)), []))
    with pytest.raises(ModelError, match="k=5"):
        train(ModelSpec("KNN", {"k": 5}), FeatureMatrix(np.eye(3), ["A", "B", "A"]))
    model = train(ModelSpec("MultinomialNB"), FeatureMatrix(np.eye(3), ["A", "B", "A"]))
    with pytest.raises(ModelError, match="dimension"):
        predict(model, np.ones((1, 4)))


@pytest.mark.parametrize("family", ["GaussianNB", "MultinomialNB", "ComplementNB", "BernoulliNB", "KNN"])
def test_single_class_predicts_that_class(family):
    model = train(ModelSpec(family, {"k": 1} if family == "KNN" else {}), FeatureMatrix(np.eye(3), ["N"] * 3))
    assert predict(model, np.random.default_rng(0).random((5, 3))) == ["N"] * 5


# -- naive Bayes ------------------------------------------------------------------------

def test_multinomial_worked_example():
    m = FeatureMatrix(np.array([[2.0, 0.0], [0.0, 2.0]]), ["P", "N"])
    model = train(ModelSpec("MultinomialNB"), m)
    P = model.class_list.index("P")
    assert np.exp(model.state["feature_log_prob"][P]) == pytest.approx([3 / 4, 1 / 4])
    assert predict(model, np.array([[1.0, 0.0]])) == ["P"]


@pytest.mark.parametrize("ours, theirs", [
    ("MultinomialNB", "MultinomialNB"), ("ComplementNB", "ComplementNB"),
    ("BernoulliNB", "BernoulliNB"), ("GaussianNB", "GaussianNB"),
])
def test_naive_bayes_matches_scikit_learn(ours, theirs):
    nb = pytest.importorskip("sklearn.naive_bayes")
    for seed in range(5):
        m = random_matrix(seed, n=30, V=8)
        model = train(ModelSpec(ours), m)
        X = m.X.toarray() if ours == "GaussianNB" else m.X
        ref = getattr(nb, theirs)().fit(X, m.labels)
        Q = random_matrix(seed + 100, n=20, V=8).X
        Qx = Q.toarray() if ours == "GaussianNB" else Q
        assert predict(model, Q) == list(ref.predict(Qx)) or ours == "ComplementNB"
        if ours != "ComplementNB":  # scikit-learn adds the prior for multi-class CNB; ours does not
            order = [list(ref.classes_).index(c) for c in model.class_list]
            assert np.allclose(decision_scores(model, Q), ref.predict_joint_log_proba(Qx)[:, order], atol=1e-9)


def test_gaussian_batches_do_not_change_result():
    m = random_matrix(4, n=50)
    a = train(ModelSpec("GaussianNB"), m)
    b = train(ModelSpec("GaussianNB", {"row_cap": 7}), m)
    assert np.allclose(decision_scores(a, m), decision_scores(b, m), rtol=1e-12)


# -- KNN ----------------------------------------------------------------------------------

def test_knn_examples():
    one = train(ModelSpec("KNN", {"k": 1}), FeatureMatrix(np.array([[0.0, 1.0]]), [L.Neutral]))
    assert predict(one, np.array([[5.0, 5.0], [0.0, 0.0]])) == [L.Neutral, L.Neutral]
    pts = np.array([[0.0], [0.1], [0.2], [5.0]])
    three = train(ModelSpec("KNN", {"k": 3}), FeatureMatrix(pts, [L.Positive, L.Negative, L.Positive, L.Negative]))
    assert predict(three, np.array([[0.05]])) == [L.Positive]


def test_knn_neighbors_examples():
    pts = np.array([[1.0, 0], [2.0, 0], [3.0, 0], [1.0, 0]])
    model = train(ModelSpec("KNN", {"k": 1}), FeatureMatrix(pts, list("abcd")))
    assert knn_neighbors(model, np.array([[0.0, 0]]), 2) == [(0, 1.0), (3, 1.0)]
    assert knn_neighbors(model, SparseVector(2, ((0, 2.0),)), 1) == [(1, 0.0)]
    with pytest.raises(ModelError):
        knn_neighbors(model, np.zeros((1, 2)), 5)


def test_knn_vote_tie_goes_to_earlier_class():
    pts = np.array([[-1.0], [1.0]])
    model = train(ModelSpec("KNN", {"k": 2}), FeatureMatrix(pts, ["first", "second"]))
    assert predict(model, np.array([[0.0], [0.9]])) == ["first", "first"]


def test_knn_matches_scikit_learn_on_tfidf_like_rows():
    neighbors = pytest.importorskip("sklearn.neighbors")
    rng = np.random.default_rng(5)
    X = rng.random((60, 10))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Q = rng.random((15, 10))
    model = train(ModelSpec("KNN", {"k": 5}), FeatureMatrix(X, ["x"] * 60))
    ref = neighbors.NearestNeighbors(n_neighbors=5).fit(X)
    _, idx = ref.kneighbors(Q)
    for q, want in zip(Q, idx):
        assert [i for i, _ in knn_neighbors(model, q[None, :], 5)] == want.tolist()


# -- linear -----------------------------------------------------------------------------

def test_zero_weights_pick_first_class():
    model = train(ModelSpec("LinearSVM"), FeatureMatrix(np.eye(2), ["B", "A"]))
    zeroed = TrainedModel(model.spec, model.class_list,
                          {k: np.zeros_like(v) for k, v in model.state.items()}, model.n_features)
    assert predict(zeroed, np.random.default_rng(1).random((4, 2))) == ["B"] * 4


@pytest.mark.parametrize("family", ["LinearSVM", "SGDClassifier"])
def test_linear_learns_separable_multiclass(family):
    rng = np.random.default_rng(2)
    centers = np.array([[4.0, 0, 0], [0, 4.0, 0], [0, 0, 4.0]])
    y = rng.integers(0, 3, size=150)
    X = centers[y] + rng.normal(scale=0.4, size=(150, 3))
    m = FeatureMatrix(X, [str(c) for c in y])
    model = train(ModelSpec(family, seed=1), m)
    assert np.mean([p == t for p, t in zip(predict(model, m), m.labels)]) >= 0.98


def test_linear_seed_changes_shuffle_only():
    m = random_matrix(6)
    a = train(ModelSpec("LinearSVM", seed=1), m).state["coef"]
    b = train(ModelSpec("LinearSVM", seed=2), m).state["coef"]
    assert not np.array_equal(a, b)


# -- forest -------------------------------------------------------------------------------

@pytest.mark.parametrize("labels, value", [("AABB", 0.5), ("AAAA", 0.0), ("AAAB", 0.375)])
def test_gini_examples(labels, value):
    assert gini_impurity(labels) == pytest.approx(value, abs=1e-15)


def test_gini_bounds_and_empty():
    assert gini_impurity("ABCDEFG") == pytest.approx(1 - 1 / 7)
    with pytest.raises(ValueError):
        gini_impurity([])


def test_internal_nodes_split_their_samples():
    m = random_matrix(7, n=60)
    spec = ModelSpec("RandomForest", {"n_estimators": 1, "bootstrap": False}, seed=4)
    model = train(spec, m)
    tree = forest.unpack(model.state)[0]
    X = m.X.toarray()

    def walk(node, rows):
        f = tree["feature"][node]
        if f < 0:
            return
        go = X[rows, f] <= tree["threshold"][node]
        assert go.any() and (~go).any()
        walk(tree["left"][node], rows[go])
        walk(tree["right"][node], rows[~go])

    walk(0, np.arange(len(m)))
    assert predict(model, m) == m.labels or len(set(map(tuple, X))) < len(m)


def test_forest_vote_is_modal_and_parallel_safe():
    m = random_matrix(8, n=50)
    model = train(ModelSpec("RandomForest", {"n_estimators": 9}, seed=5), m)
    votes = tree_votes(model, m)
    for p, v in zip(predict(model, m), votes):
        counts = {c: v.count(c) for c in model.class_list}
        assert counts[p] == max(counts.values())
        assert p == next(c for c in model.class_list if counts[c] == max(counts.values()))
    # each tree depends only on (seed, tree index): a 9-tree forest extends a 4-tree one
    small = train(ModelSpec("RandomForest", {"n_estimators": 4}, seed=5), m)
    assert [row[:4] for row in votes] == tree_votes(small, m)


def test_candidate_feature_counts():
    assert forest.n_candidate_features("sqrt", 100) == 10
    assert forest.n_candidate_features("all", 7) == 7
    assert forest.n_candidate_features(3, 2) == 2
    assert forest.n_candidate_features("sqrt", 1) == 1


def test_sparse_and_dense_tree_paths_agree(monkeypatch):
    m = random_matrix(9, n=40, V=15)
    spec = ModelSpec("RandomForest", {"n_estimators": 3}, seed=1)
    dense = train(spec, m)
    monkeypatch.setattr(forest, "DENSE_LIMIT", 0)
    sparse = train(spec, m)
    for k in dense.state:
        assert np.array_equal(dense.state[k], sparse.state[k]), k
    assert math.isfinite(float(sparse.state["threshold"].sum()))
