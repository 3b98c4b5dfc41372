"""Pipeline configuration: a YAML file, validated strictly.

Every key is known; anything else is rejected with its dotted path so a typo
never silently falls back to a default. Relative paths are resolved against
the directory holding the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .features import VECTORIZERS
from .ingest import DEFAULT_KEYWORDS, DEFAULT_SUBREDDITS, ConfigurationError, FetchConfig
from .models import ModelError, ModelSpec, default_grid

SAMPLE = "sample"
BUILTIN = "builtin"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class CVRun:
    vectorizer: str
    spec: ModelSpec


def default_cv_runs() -> list[CVRun]:
    """The four cross-validated configurations reported alongside the grid."""
    return [
        CVRun("tfidf", ModelSpec("LinearSVM")),
        CVRun("tfidf", ModelSpec("RandomForest", {"n_estimators": 40})),
        CVRun("count", ModelSpec("LinearSVM")),
        CVRun("count", ModelSpec("SGDClassifier")),
    ]


@dataclass
class PipelineConfig:
    corpus: str = SAMPLE
    fetch: FetchConfig | None = None
    lexicon: str = BUILTIN
    stopwords: str = BUILTIN
    extra_stopwords: str | None = None
    lemma_suffixes: str = BUILTIN
    lemma_exceptions: str = BUILTIN
    vectorizers: tuple[str, ...] = ("tfidf", "count")
    min_df: int = 1
    models: list[ModelSpec] = field(default_factory=default_grid)
    test_fraction: float = 0.3
    stratified: bool = False
    cv_k: int = 5
    cv_runs: list[CVRun] = field(default_factory=default_cv_runs)
    out: str = "vaxsent-out"
    top_n: int = 50
    seed: int = 0

    def corpus_path(self) -> Path:
        if self.corpus == SAMPLE:
            return Path(str(resources.files("vaxsent").joinpath("data").joinpath("sample_corpus.jsonl")))
        return Path(self.corpus)

    def to_dict(self) -> dict:
        """Plain-data view, used for logging the effective configuration."""
        return {
            "corpus": self.corpus,
            "fetch": None if self.fetch is None else {
                "subreddits": list(self.fetch.subreddits), "keywords": list(self.fetch.keywords),
                "max_comments": self.fetch.max_comments, "rate_limit": self.fetch.rate_limit,
            },
            "lexicon": self.lexicon,
            "stopwords": self.stopwords,
            "extra_stopwords": self.extra_stopwords,
            "lemma": {"suffixes": self.lemma_suffixes, "exceptions": self.lemma_exceptions},
            "features": {"vectorizers": list(self.vectorizers), "min_df": self.min_df},
            "models": [{"family": s.family, "params": s.params} for s in self.models],
            "split": {"test_fraction": self.test_fraction, "stratified": self.stratified},
            "cv": {"k": self.cv_k, "runs": [{"vectorizer": r.vectorizer, "family": r.spec.family,
                                             "params": r.spec.params} for r in self.cv_runs]},
            "report": {"out": self.out, "top_n": self.top_n},
            "seed": self.seed,
        }

    def describe(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- validation helpers ---------------------------------------------------------

def _mapping(value, key: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be a mapping, got {type(value).__name__}")
    return value


def _strict(d: dict, allowed: set[str], prefix: str):
    unknown = sorted(set(d) - allowed)
    if unknown:
        names = ", ".join(f"{prefix}{k}" for k in unknown)
        raise ConfigError(f"unknown config key(s): {names}")


def _int(value, key: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{key} must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{key} must be <= {hi}, got {value}")
    return value


def _bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key} must be true or false, got {value!r}")
    return value


def _str_list(value, key: str) -> list[str]:
    if not isinstance(value, list) or not value or not all(isinstance(v, str) and v for v in value):
        raise ConfigError(f"{key} must be a non-empty list of strings")
    return value


def _path(value, key: str, base: Path, must_exist: bool = True, sentinels=(BUILTIN,)) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{key} must be a path string")
    if value in sentinels:
        return value
    p = Path(value).expanduser()
    if not p.is_absolute():
        p = base / p
    if must_exist and not p.is_file():
        raise ConfigError(f"{key}: file not found: {p}")
    return str(p)


def _spec(entry, key: str) -> ModelSpec:
    entry = _mapping(entry, key)
    _strict(entry, {"family", "params"}, f"{key}.")
    if "family" not in entry:
        raise ConfigError(f"{key}.family is required")
    params = _mapping(entry.get("params") or {}, f"{key}.params")
    try:
        return ModelSpec(entry["family"], dict(params))
    except ModelError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _vectorizer(value, key: str) -> str:
    if value not in VECTORIZERS:
        raise ConfigError(f"{key} must be one of {', '.join(VECTORIZERS)}, got {value!r}")
    return value


TOP_KEYS = {"corpus", "fetch", "lexicon", "stopwords", "extra_stopwords", "lemma", "features",
            "models", "split", "cv", "report", "seed"}


def parse_config(raw: dict | None, base: Path = Path(".")) -> PipelineConfig:
    raw = {} if raw is None else _mapping(raw, "config")
    _strict(raw, TOP_KEYS, "")
    cfg = PipelineConfig()

    if "fetch" in raw:
        f = _mapping(raw["fetch"] or {}, "fetch")
        _strict(f, {"subreddits", "keywords", "max_comments", "rate_limit"}, "fetch.")
        try:
            cfg.fetch = FetchConfig(
                subreddits=_str_list(f.get("subreddits", list(DEFAULT_SUBREDDITS)), "fetch.subreddits"),
                keywords=_str_list(f.get("keywords", list(DEFAULT_KEYWORDS)), "fetch.keywords"),
                max_comments=_int(f.get("max_comments", 1000), "fetch.max_comments", 0),
                rate_limit=_int(f.get("rate_limit", 60), "fetch.rate_limit", 1),
            )
        except ConfigurationError as exc:
            raise ConfigError(str(exc)) from None

    if "corpus" in raw:
        # with a fetch section the corpus is the fetch destination and need not exist yet
        cfg.corpus = _path(raw["corpus"], "corpus", base, must_exist=cfg.fetch is None, sentinels=(SAMPLE,))
    elif cfg.fetch is not None:
        raise ConfigError("corpus is required when fetch is configured (it names the output file)")

    cfg.lexicon = _path(raw.get("lexicon", BUILTIN), "lexicon", base)
    cfg.stopwords = _path(raw.get("stopwords", BUILTIN), "stopwords", base)
    if raw.get("extra_stopwords") is not None:
        cfg.extra_stopwords = _path(raw["extra_stopwords"], "extra_stopwords", base, sentinels=())

    if "lemma" in raw:
        lem = _mapping(raw["lemma"], "lemma")
        _strict(lem, {"suffixes", "exceptions"}, "lemma.")
        cfg.lemma_suffixes = _path(lem.get("suffixes", BUILTIN), "lemma.suffixes", base)
        cfg.lemma_exceptions = _path(lem.get("exceptions", BUILTIN), "lemma.exceptions", base)

    if "features" in raw:
        feat = _mapping(raw["features"], "features")
        _strict(feat, {"vectorizers", "min_df"}, "features.")
        if "vectorizers" in feat:
            vecs = _str_list(feat["vectorizers"], "features.vectorizers")
            vecs = [_vectorizer(v, f"features.vectorizers[{i}]") for i, v in enumerate(vecs)]
            if len(set(vecs)) != len(vecs):
                raise ConfigError("features.vectorizers has duplicates")
            cfg.vectorizers = tuple(vecs)
        cfg.min_df = _int(feat.get("min_df", 1), "features.min_df", 1)

    if "models" in raw:
        models = raw["models"]
        if not isinstance(models, list) or not models:
            raise ConfigError("models must be a non-empty list of {family, params} entries")
        cfg.models = [_spec(m, f"models[{i}]") for i, m in enumerate(models)]
        keys = [s.key for s in cfg.models]
        dup = sorted({k for k in keys if keys.count(k) > 1})
        if dup:
            raise ConfigError(f"models: duplicate entries {dup}")

    if "split" in raw:
        sp_ = _mapping(raw["split"], "split")
        _strict(sp_, {"test_fraction", "stratified"}, "split.")
        tf = sp_.get("test_fraction", 0.3)
        if isinstance(tf, bool) or not isinstance(tf, (int, float)) or not 0 < tf < 1:
            raise ConfigError(f"split.test_fraction must be in the open interval (0, 1), got {tf!r}")
        cfg.test_fraction = float(tf)
        cfg.stratified = _bool(sp_.get("stratified", False), "split.stratified")

    if "cv" in raw:
        cv = _mapping(raw["cv"], "cv")
        _strict(cv, {"k", "runs"}, "cv.")
        cfg.cv_k = _int(cv.get("k", 5), "cv.k", 2)
        if "runs" in cv:
            runs = cv["runs"]
            if not isinstance(runs, list) or not runs:
                raise ConfigError("cv.runs must be a non-empty list")
            parsed = []
            for i, r in enumerate(runs):
                r = _mapping(r, f"cv.runs[{i}]")
                _strict(r, {"vectorizer", "family", "params"}, f"cv.runs[{i}].")
                vec = _vectorizer(r.get("vectorizer"), f"cv.runs[{i}].vectorizer")
                spec = _spec({k: v for k, v in r.items() if k != "vectorizer"}, f"cv.runs[{i}]")
                parsed.append(CVRun(vec, spec))
            cfg.cv_runs = parsed

    if "report" in raw:
        rep = _mapping(raw["report"], "report")
        _strict(rep, {"out", "top_n"}, "report.")
        if "out" in rep:
            if not isinstance(rep["out"], str) or not rep["out"]:
                raise ConfigError("report.out must be a directory path")
            out = Path(rep["out"]).expanduser()
            cfg.out = str(out if out.is_absolute() else base / out)
        cfg.top_n = _int(rep.get("top_n", 50), "report.top_n", 1)

    cfg.seed = _int(raw.get("seed", 0), "seed", 0, 2**64 - 1)
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    return parse_config(raw, path.parent)


validate_config = load_config
