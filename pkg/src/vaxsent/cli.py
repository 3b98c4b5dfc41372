"""Command-line entry point.

    vaxsent run-all --config experiment.yaml --seed 7 --out results/

Exit status: 0 on success, 1 on a runtime failure, 2 on a configuration
problem (bad config file, bad flag, unknown subcommand, missing credentials).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import SAMPLE, ConfigError, PipelineConfig, load_config
from .ingest import (ConfigurationError, Credentials, FetchConfig, FetchStats, IngestError,
                     authenticate, fetch_comments, save_corpus)
from .models import ModelError
from .pipeline import (Resources, annotate_step, annotated_for, build_features, cv_step, default_jobs,
                       evaluate_step, term_stopwords, train_step, write_annotated)
from .report import frequency_report, render_reports, term_frequencies

log = logging.getLogger("vaxsent")

COMMANDS = ("fetch", "annotate", "train", "evaluate", "cv", "report", "run-all")


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS  # so flags given before and after the subcommand both count
    p.add_argument("--config", metavar="PATH", default=s, help="YAML pipeline configuration")
    p.add_argument("--seed", type=int, metavar="N", default=s, help="global seed (overrides the config)")
    p.add_argument("--jobs", type=int, metavar="N", default=s, help="worker processes (default: all CPUs)")
    p.add_argument("--out", metavar="DIR", default=s, help="output directory (overrides report.out)")
    p.add_argument("--k", type=int, metavar="N", default=s, help="cross-validation folds (default 5)")
    p.add_argument("--top-n", type=int, metavar="N", default=s, dest="top_n", help="number of terms to rank")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="vaxsent", parents=[common],
                                     description="Lexicon-labelled sentiment pipeline for vaccine discussion comments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    helps = {
        "fetch": "download comments from the Reddit API into the corpus file",
        "annotate": "label the corpus with lexicon polarity and write the frequency table",
        "train": "fit every model of the grid on the training split and save them",
        "evaluate": "held-out metrics for the model grid (model_comparison.csv)",
        "cv": "k-fold cross-validation scores (cv_scores.csv)",
        "report": "write every table and chart",
        "run-all": "annotate, train, evaluate, cross-validate and report in one go",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args) -> PipelineConfig:
    path = getattr(args, "config", None)
    cfg = load_config(path) if path else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(f"--seed must be in [0, 2^64), got {args.seed}")
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "k", None) is not None:
        if args.k < 2:
            raise ConfigError(f"--k (cv.k) must be >= 2, got {args.k}")
        cfg.cv_k = args.k
    if getattr(args, "top_n", None) is not None:
        if args.top_n < 1:
            raise ConfigError(f"--top-n (report.top_n) must be >= 1, got {args.top_n}")
        cfg.top_n = args.top_n
    jobs = getattr(args, "jobs", None)
    if jobs is not None and jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    return cfg


# -- subcommands ----------------------------------------------------------------------

def cmd_fetch(cfg: PipelineConfig, jobs: int) -> None:
    creds = Credentials.from_env()
    fetch_cfg = cfg.fetch or FetchConfig()
    target = Path(cfg.out) / "corpus.jsonl" if cfg.corpus == SAMPLE else Path(cfg.corpus)
    client, _ = authenticate(creds, rate_limit=fetch_cfg.rate_limit)
    stats = FetchStats()
    comments = fetch_comments(fetch_cfg, client, stats)
    target.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(comments, target)
    for kw in fetch_cfg.keywords:
        log.info("keyword %s: %d comments", kw, stats.per_keyword.get(kw, 0))
    log.info("wrote %d unique comments to %s (%d malformed records skipped)", len(comments), target, stats.skipped)


def cmd_annotate(cfg: PipelineConfig, jobs: int) -> None:
    res = Resources.from_config(cfg)
    annotated = annotate_step(cfg, res)
    path = write_annotated(cfg, annotated)
    render_reports(cfg.out, frequency=frequency_report(annotated))
    log.info("annotated %d comments -> %s", len(annotated), path)


def cmd_train(cfg: PipelineConfig, jobs: int) -> None:
    res = Resources.from_config(cfg)
    feats = build_features(cfg, annotated_for(cfg, res))
    written = train_step(cfg, feats, jobs)
    log.info("saved %d models under %s", len(written), Path(cfg.out) / "models")


def cmd_evaluate(cfg: PipelineConfig, jobs: int) -> None:
    res = Resources.from_config(cfg)
    feats = build_features(cfg, annotated_for(cfg, res))
    rows = evaluate_step(cfg, feats, jobs)
    render_reports(cfg.out, comparison=rows)
    log.info("wrote %d model-comparison rows", len(rows))


def cmd_cv(cfg: PipelineConfig, jobs: int) -> None:
    res = Resources.from_config(cfg)
    feats = build_features(cfg, annotated_for(cfg, res))
    rows = cv_step(cfg, feats, jobs)
    render_reports(cfg.out, cv=rows)
    for r in rows:
        log.info("cv %s / %s (%s): %.4f", r["model"], r["vectorizer"], r["parameter"], r["score"])


def _full_report(cfg: PipelineConfig, jobs: int, res: Resources, annotated) -> None:
    feats = build_features(cfg, annotated)
    render_reports(
        cfg.out,
        frequency=frequency_report(annotated),
        terms=term_frequencies(annotated, cfg.top_n, term_stopwords(res)),
        top_n=cfg.top_n,
        comparison=evaluate_step(cfg, feats, jobs),
        cv=cv_step(cfg, feats, jobs),
    )


def cmd_report(cfg: PipelineConfig, jobs: int) -> None:
    res = Resources.from_config(cfg)
    _full_report(cfg, jobs, res, annotated_for(cfg, res))
    log.info("reports written to %s", cfg.out)


def cmd_run_all(cfg: PipelineConfig, jobs: int) -> None:
    if cfg.fetch is not None:
        cmd_fetch(cfg, jobs)
    res = Resources.from_config(cfg)
    annotated = annotate_step(cfg, res)
    write_annotated(cfg, annotated)
    train_step(cfg, build_features(cfg, annotated), jobs)
    _full_report(cfg, jobs, res, annotated)
    log.info("pipeline finished; outputs in %s", cfg.out)


HANDLERS = {
    "fetch": cmd_fetch,
    "annotate": cmd_annotate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "cv": cmd_cv,
    "report": cmd_report,
    "run-all": cmd_run_all,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help/--version, 2 for usage errors
        return int(exc.code or 0)

    if not logging.getLogger().handlers and not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("vaxsent: %(message)s"))
        log.addHandler(handler)
    log.setLevel(logging.INFO)

    try:
        cfg = resolve_config(args)
    except (ConfigError, ConfigurationError, ModelError) as exc:
        print(f"vaxsent: configuration error: {exc}", file=sys.stderr)
        return 2
    jobs = getattr(args, "jobs", None) or default_jobs()
    log.info("effective config: %s", cfg.describe())
    log.info("seed: %d, jobs: %d", cfg.seed, jobs)

    started = time.perf_counter()
    try:
        HANDLERS[args.command](cfg, jobs)
    except (ConfigError, ConfigurationError) as exc:
        print(f"vaxsent: configuration error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, ModelError, ValueError, RuntimeError, OSError) as exc:
        print(f"vaxsent: error: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
