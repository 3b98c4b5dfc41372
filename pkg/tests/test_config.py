import pytest
import yaml

from vaxsent.config import ConfigError, PipelineConfig, load_config, parse_config, validate_config
from vaxsent.models import default_grid


def write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


@pytest.fixture
def corpus(tmp_path):
    p = tmp_path / "corpus.jsonl"
    p.write_text("")
    return p


def test_minimal_config_defaults(tmp_path, corpus):
    cfg = load_config(write(tmp_path, {"corpus": "corpus.jsonl"}))
    assert cfg.corpus == str(corpus)
    assert cfg.test_fraction == 0.3 and cfg.cv_k == 5
    assert cfg.vectorizers == ("tfidf", "count")
    assert cfg.models == default_grid()
    assert cfg.seed == 0 and cfg.top_n == 50


def test_empty_file_means_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    cfg = load_config(p)
    assert cfg.corpus == "sample" and cfg.corpus_path().is_file()


@pytest.mark.parametrize("raw, key", [
    ({"split": {"test_fraction": 1.5}}, "split.test_fraction"),
    ({"split": {"test_fraction": 0}}, "split.test_fraction"),
    ({"split": {"ratio": 0.3}}, "split.ratio"),
    ({"bogus": 1}, "bogus"),
    ({"cv": {"k": 1}}, "cv.k"),
    ({"features": {"vectorizers": ["hashing"]}}, "features.vectorizers[0]"),
    ({"features": {"vectorizers": []}}, "features.vectorizers"),
    ({"models": []}, "models"),
    ({"models": [{"family": "KNN", "params": {"k": 0}}]}, "models[0]"),
    ({"models": [{"family": "KNN", "params": {"neighbours": 3}}]}, "models[0]"),
    ({"models": [{"params": {}}]}, "models[0].family"),
    ({"report": {"top_n": 0}}, "report.top_n"),
    ({"seed": -1}, "seed"),
    ({"seed": 2**64}, "seed"),
    ({"cv": {"runs": [{"vectorizer": "tfidf", "family": "SVM"}]}}, "cv.runs[0]"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert key in str(info.value)


def test_missing_lexicon_names_path(tmp_path):
    with pytest.raises(ConfigError, match="no_such_lexicon.tsv"):
        load_config(write(tmp_path, {"lexicon": "no_such_lexicon.tsv"}))
    with pytest.raises(ConfigError, match="corpus"):
        parse_config({"corpus": str(tmp_path / "missing.jsonl")})


def test_missing_or_invalid_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        validate_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("corpus: [unclosed\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)


def test_fetch_config_allows_missing_corpus(tmp_path):
    cfg = load_config(write(tmp_path, {"corpus": "out/corpus.jsonl",
                                       "fetch": {"subreddits": ["india"], "max_comments": 10}}))
    assert list(cfg.fetch.subreddits) == ["india"] and cfg.fetch.max_comments == 10
    with pytest.raises(ConfigError, match="corpus is required"):
        parse_config({"fetch": {}})


def test_full_config_round_trips_through_describe(tmp_path, corpus):
    raw = {
        "corpus": "corpus.jsonl",
        "features": {"vectorizers": ["count"], "min_df": 2},
        "models": [{"family": "KNN", "params": {"k": 3}}, {"family": "MultinomialNB"}],
        "split": {"test_fraction": 0.25, "stratified": True},
        "cv": {"k": 4, "runs": [{"vectorizer": "count", "family": "MultinomialNB"}]},
        "report": {"out": "results", "top_n": 10},
        "seed": 2**64 - 1,
    }
    cfg = load_config(write(tmp_path, raw))
    assert cfg.vectorizers == ("count",) and cfg.min_df == 2
    assert [s.key for s in cfg.models] == [s.key for s in parse_config(raw, tmp_path).models]
    assert cfg.out == str(tmp_path / "results")
    d = cfg.to_dict()
    assert d["split"] == {"test_fraction": 0.25, "stratified": True}
    assert d["cv"]["k"] == 4 and d["seed"] == 2**64 - 1
    assert '"seed": 18446744073709551615' in cfg.describe()


def test_default_config_object():
    cfg = PipelineConfig()
    assert len(cfg.models) == 13 and len(cfg.cv_runs) == 4


def test_example_config_matches_defaults():
    from pathlib import Path

    cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "example.yaml")
    default = PipelineConfig()
    assert cfg.models == default.models
    assert [(r.vectorizer, r.spec) for r in cfg.cv_runs] == [(r.vectorizer, r.spec) for r in default.cv_runs]
    assert (cfg.test_fraction, cfg.cv_k, cfg.top_n, cfg.seed) == (0.3, 5, 50, 0)
