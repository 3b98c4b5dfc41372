"""End-to-end steps shared by the CLI subcommands.

Per-spec and per-fold work is farmed out to worker processes; results are
always collected in submission order, so the number of workers never changes
the output.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .annotate import AnnotatedComment, Lexicon, annotate_corpus, load_annotated, save_annotated
from .config import CVRun, PipelineConfig
from .evaluation import SplitConfig, compute_metrics, kfold_cv, split_indices
from .features import FeatureMatrix, Vocabulary, build_vocabulary, feature_matrix
from .ingest import load_corpus
from .models import ModelSpec, TrainedModel, derive_seed, predict, save_model, train
from .preprocess import NEGATORS, LemmaRules, StopwordList

log = logging.getLogger("vaxsent")

VECTORIZER_NAMES = {"tfidf": "TF-IDF", "count": "Count Vectorizer"}
ANNOTATED = "annotated.jsonl"


class EmptyCorpusError(RuntimeError):
    pass


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


@dataclass
class Resources:
    lexicon: Lexicon
    stopwords: StopwordList
    rules: LemmaRules

    @classmethod
    def from_config(cls, cfg: PipelineConfig) -> "Resources":
        return cls(
            Lexicon.load(cfg.lexicon),
            StopwordList.load(cfg.stopwords, cfg.extra_stopwords),
            LemmaRules.from_files(
                None if cfg.lemma_suffixes == "builtin" else cfg.lemma_suffixes,
                None if cfg.lemma_exceptions == "builtin" else cfg.lemma_exceptions,
            ),
        )


def annotate_step(cfg: PipelineConfig, res: Resources) -> list[AnnotatedComment]:
    path = cfg.corpus_path()
    comments = load_corpus(path)
    if not comments:
        raise EmptyCorpusError(f"empty corpus: {path} has no comments")
    return annotate_corpus(comments, res.lexicon, res.stopwords, res.rules)


def annotated_for(cfg: PipelineConfig, res: Resources) -> list[AnnotatedComment]:
    """Reuse ``<out>/annotated.jsonl`` when present, otherwise annotate the corpus."""
    path = Path(cfg.out) / ANNOTATED
    if path.is_file():
        annotated = load_annotated(path, res.stopwords, res.rules)
        if not annotated:
            raise EmptyCorpusError(f"empty corpus: {path} has no comments")
        return annotated
    return annotate_step(cfg, res)


def write_annotated(cfg: PipelineConfig, annotated: list[AnnotatedComment]) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_annotated(annotated, out / ANNOTATED)
    return out / ANNOTATED


def term_stopwords(res: Resources) -> StopwordList:
    # negators survive preprocessing for the scorer but are noise in a term ranking
    return res.stopwords.union(NEGATORS)


# -- features and splits ----------------------------------------------------------

@dataclass
class Features:
    vocabulary: Vocabulary
    matrices: dict[str, FeatureMatrix]


def build_features(cfg: PipelineConfig, annotated: list[AnnotatedComment]) -> Features:
    """One vocabulary over the whole corpus, one matrix per vectorizer in use."""
    docs = [a.tokens for a in annotated]
    labels = [a.label for a in annotated]
    v = build_vocabulary(docs, cfg.min_df)
    needed = list(cfg.vectorizers) + [r.vectorizer for r in cfg.cv_runs]
    mats = {vec: feature_matrix(docs, labels, vec, vocabulary=v)[0] for vec in dict.fromkeys(needed)}
    return Features(v, mats)


def split_config(cfg: PipelineConfig) -> SplitConfig:
    return SplitConfig(cfg.test_fraction, cfg.seed, cfg.stratified)


def seeded(cfg: PipelineConfig, vec: str, spec: ModelSpec) -> ModelSpec:
    return spec.with_seed(derive_seed(cfg.seed, "model", vec, spec.key))


def table_order(cfg: PipelineConfig) -> list[tuple[str, ModelSpec]]:
    """Non-parametric rows for every vectorizer first, then parametric ones."""
    return [
        (vec, seeded(cfg, vec, spec))
        for parametric in (False, True)
        for vec in cfg.vectorizers
        for spec in cfg.models
        if spec.parametric == parametric
    ]


def model_path(cfg: PipelineConfig, vec: str, spec: ModelSpec) -> Path:
    return Path(cfg.out) / "models" / vec / f"{spec.key}.vxm"


# -- worker plumbing ----------------------------------------------------------------

_SHARED: dict = {}


def _init_worker(shared: dict):
    _SHARED.clear()
    _SHARED.update(shared)


def _run_parallel(fn, tasks: list, shared: dict, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        _init_worker(shared)
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks)), initializer=_init_worker,
                             initargs=(shared,)) as pool:
        return list(pool.map(fn, tasks))


def _split(matrix: FeatureMatrix, split: SplitConfig):
    tr, te = split_indices(matrix.labels, split)
    return matrix.subset(tr), matrix.subset(te)


def _train_task(task) -> TrainedModel:
    vec, spec = task
    train_m, _ = _split(_SHARED["matrices"][vec], _SHARED["split"])
    return train(spec, train_m)


def _evaluate_task(task) -> dict:
    vec, spec = task
    train_m, test_m = _split(_SHARED["matrices"][vec], _SHARED["split"])
    model = train(spec, train_m)
    metrics = compute_metrics(test_m.labels, predict(model, test_m))
    return {
        "vectorizer": VECTORIZER_NAMES[vec],
        "model": spec.model_name,
        "family": spec.family,
        "parameter": spec.parameter_text,
        **metrics.as_row(),
    }


def _cv_task(task) -> dict:
    vec, spec, k, seed = task
    res = kfold_cv(spec, _SHARED["matrices"][vec], k, seed)
    return {
        "model": spec.model_name,
        "family": spec.family,
        "vectorizer": VECTORIZER_NAMES[vec],
        "parameter": spec.parameter_text,
        "k": k,
        "score": res.mean_score,
        "fold_scores": res.fold_scores,
    }


# -- steps ---------------------------------------------------------------------------

def train_step(cfg: PipelineConfig, feats: Features, jobs: int) -> list[Path]:
    order = table_order(cfg)
    shared = {"matrices": feats.matrices, "split": split_config(cfg)}
    models = _run_parallel(_train_task, order, shared, jobs)
    written = []
    for (vec, spec), model in zip(order, models):
        p = model_path(cfg, vec, spec)
        p.parent.mkdir(parents=True, exist_ok=True)
        save_model(model, p)
        written.append(p)
    feats.vocabulary.save(Path(cfg.out) / "models" / "vocabulary.tsv")
    return written


def evaluate_step(cfg: PipelineConfig, feats: Features, jobs: int) -> list[dict]:
    """Model-comparison rows in table order.

    Models are refit on the training side of the split rather than read back
    from ``models/``: fitting is deterministic, so the result is the same, and
    a stale file from another split can never leak into the metrics.
    """
    tasks = table_order(cfg)
    shared = {"matrices": feats.matrices, "split": split_config(cfg)}
    return _run_parallel(_evaluate_task, tasks, shared, jobs)


def cv_step(cfg: PipelineConfig, feats: Features, jobs: int) -> list[dict]:
    runs: list[CVRun] = cfg.cv_runs
    n = len(next(iter(feats.matrices.values())))
    if cfg.cv_k > n:
        raise ValueError(f"cv.k={cfg.cv_k} exceeds the number of comments ({n})")
    tasks = [(r.vectorizer, seeded(cfg, r.vectorizer, r.spec), cfg.cv_k, derive_seed(cfg.seed, "cv"))
             for r in runs]
    return _run_parallel(_cv_task, tasks, {"matrices": feats.matrices}, jobs)
