"""Descriptive outputs: frequency table, cumulative distribution, term counts,
model comparison tables, and plain SVG bar charts.

Every writer here is a pure function of its inputs (no timestamps, fixed
number formatting), so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from .annotate import TABLE_ORDER, AnnotatedComment, SentimentLabel
from .preprocess import StopwordList

CENT = Decimal("0.01")

COLORS = {
    SentimentLabel.StronglyNegative: "#b2182b",
    SentimentLabel.Negative: "#d6604d",
    SentimentLabel.WeaklyNegative: "#f4a582",
    SentimentLabel.Neutral: "#bababa",
    SentimentLabel.WeaklyPositive: "#92c5de",
    SentimentLabel.Positive: "#4393c3",
    SentimentLabel.StronglyPositive: "#2166ac",
}


@dataclass(frozen=True)
class FrequencyRow:
    label: SentimentLabel
    count: int
    percentage: Decimal


@dataclass(frozen=True)
class FrequencyTable:
    rows: tuple[FrequencyRow, ...]
    total: int

    def row(self, label: SentimentLabel) -> FrequencyRow:
        return next(r for r in self.rows if r.label is label)

    def as_dicts(self) -> list[dict]:
        return [
            {"sentiment": r.label.display, "label": r.label.value, "frequency": r.count,
             "percentage": float(r.percentage)}
            for r in self.rows
        ]

    @classmethod
    def from_counts(cls, counts: Mapping[SentimentLabel, int]) -> "FrequencyTable":
        counts = {SentimentLabel(k): int(v) for k, v in counts.items()}
        if any(v < 0 for v in counts.values()):
            raise ValueError("counts must be non-negative")
        total = sum(counts.values())
        if total == 0:
            raise ValueError("frequency report needs at least one comment")
        rows = tuple(
            FrequencyRow(lab, counts.get(lab, 0),
                         (Decimal(100 * counts.get(lab, 0)) / Decimal(total)).quantize(CENT, ROUND_HALF_UP))
            for lab in TABLE_ORDER
        )
        return cls(rows, total)


def frequency_report(annotated: Sequence[AnnotatedComment]) -> FrequencyTable:
    if not annotated:
        raise ValueError("frequency report needs at least one comment")
    return FrequencyTable.from_counts(Counter(a.label for a in annotated))


def cumulative_distribution(ft: FrequencyTable) -> list[tuple[SentimentLabel, Decimal, Decimal]]:
    """Labels with non-zero counts by descending share, with a running total."""
    present = [r for r in ft.rows if r.count > 0]
    present.sort(key=lambda r: (-r.count, TABLE_ORDER.index(r.label)))
    out = []
    running = Decimal(0)
    for r in present:
        running += r.percentage
        out.append((r.label, r.percentage, running))
    return out


def term_frequencies(annotated: Iterable[AnnotatedComment], top_n: int,
                     sw: StopwordList | None = None) -> list[tuple[str, int]]:
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    stop = sw.words if sw is not None else frozenset()
    counts = Counter(t for a in annotated for t in a.tokens if t not in stop)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]


COMPARISON_COLUMNS = (
    "vectorizer", "model", "family", "parameter", "accuracy", "f1_weighted", "precision_weighted",
    "recall_weighted", "f1_macro", "precision_macro", "recall_macro", "zero_division",
)
CV_COLUMNS = ("model", "family", "vectorizer", "parameter", "k", "score", "fold_scores")


# -- file emission ----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, Decimal):
        return f"{v:.2f}"
    return str(v)


def _csv_text(columns: Sequence[str], rows: Iterable[Mapping]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _json_default(v):
    if isinstance(v, Decimal):
        return float(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_table(out: Path, stem: str, columns: Sequence[str], rows: list[Mapping], extra_csv: str = ""):
    _write(out / f"{stem}.csv", _csv_text(columns, rows) + extra_csv)
    _write(out / f"{stem}.json", json.dumps(rows, indent=2, ensure_ascii=False, default=_json_default) + "\n")


def write_frequency(out: Path, ft: FrequencyTable):
    rows = [{"sentiment": r.label.display, "frequency": r.count, "percentage": r.percentage} for r in ft.rows]
    total_pct = sum((r.percentage for r in ft.rows), Decimal(0))
    totals = _csv_text(("sentiment", "frequency", "percentage"),
                       [{"sentiment": "Total", "frequency": ft.total, "percentage": total_pct}])
    _write(out / "sentiment_frequency.csv",
           _csv_text(("sentiment", "frequency", "percentage"), rows) + totals.split("\n", 1)[1])
    payload = {"rows": rows, "total": ft.total}
    _write(out / "sentiment_frequency.json",
           json.dumps(payload, indent=2, default=_json_default) + "\n")


def write_cumulative(out: Path, cum):
    rows = [{"sentiment": lab.display, "percentage": pct, "cumulative": c} for lab, pct, c in cum]
    _write_table(out, "cumulative", ("sentiment", "percentage", "cumulative"), rows)


def write_terms(out: Path, terms: list[tuple[str, int]], top_n: int):
    rows = [{"rank": i + 1, "term": t, "count": c} for i, (t, c) in enumerate(terms)]
    _write_table(out, f"terms_top{top_n}", ("rank", "term", "count"), rows)


def write_comparison(out: Path, rows: list[Mapping]):
    if not rows:
        raise ValueError("model comparison is empty; nothing to report")
    _write_table(out, "model_comparison", COMPARISON_COLUMNS, [dict(r) for r in rows])


def write_cv(out: Path, rows: list[Mapping]):
    if not rows:
        raise ValueError("cross-validation results are empty; nothing to report")
    flat = [{**r, "fold_scores": " ".join(f"{s:.6f}" for s in r["fold_scores"])} for r in rows]
    _write(out / "cv_scores.csv", _csv_text(CV_COLUMNS, flat))
    _write(out / "cv_scores.json", json.dumps([dict(r) for r in rows], indent=2) + "\n")


# -- SVG ----------------------------------------------------------------------------

def _svg(width: int, height: int, body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">')
    return "\n".join([head, f"<title>{escape(title)}</title>",
                      f'<rect width="{width}" height="{height}" fill="#ffffff"/>', *body, "</svg>"]) + "\n"


def _text(x, y, s, anchor="start", size=12, weight="normal") -> str:
    return (f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" font-size="{size}" '
            f'font-weight="{weight}">{escape(str(s))}</text>')


def distribution_svg(cum) -> str:
    """Stacked 100% bar of the label shares on top, bars with a cumulative line below."""
    W, H = 760, 460
    left, right = 60, 20
    plot_w = W - left - right
    body = [_text(W / 2, 24, "Sentiment distribution", "middle", 15, "bold")]
    x = float(left)
    for lab, pct, _ in cum:
        w = plot_w * float(pct) / 100.0
        body.append(f'<rect x="{x:.2f}" y="44.00" width="{w:.2f}" height="36.00" fill="{COLORS[lab]}"/>')
        if w > 34:
            body.append(_text(x + w / 2, 66, f"{pct:.2f}%", "middle", 11))
        x += w
    top, bottom = 110, H - 70
    plot_h = bottom - top
    n = max(1, len(cum))
    slot = plot_w / n
    points = []
    for i, (lab, pct, c) in enumerate(cum):
        h = plot_h * float(pct) / 100.0
        bx = left + i * slot + slot * 0.15
        body.append(f'<rect x="{bx:.2f}" y="{bottom - h:.2f}" width="{slot * 0.7:.2f}" '
                    f'height="{h:.2f}" fill="{COLORS[lab]}"/>')
        body.append(_text(left + (i + 0.5) * slot, bottom + 16, lab.display, "middle", 10))
        cy = bottom - plot_h * float(c) / 100.0
        points.append(f"{left + (i + 0.5) * slot:.2f},{cy:.2f}")
        body.append(_text(left + (i + 0.5) * slot, cy - 6, f"{c:.2f}%", "middle", 10))
    body.append(f'<line x1="{left}" y1="{bottom}" x2="{W - right}" y2="{bottom}" stroke="#333333"/>')
    body.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#333333"/>')
    for tick in (0, 25, 50, 75, 100):
        ty = bottom - plot_h * tick / 100.0
        body.append(_text(left - 6, ty + 4, f"{tick}%", "end", 10))
    if points:
        body.append(f'<polyline points="{" ".join(points)}" fill="none" stroke="#222222" stroke-width="2"/>')
    return _svg(W, H, body, "Sentiment distribution with cumulative percentage")


def cumulative_svg(cum) -> str:
    W = 760
    row_h = 30
    H = 60 + row_h * max(1, len(cum))
    left, right = 140, 70
    plot_w = W - left - right
    body = [_text(W / 2, 24, "Cumulative share by sentiment", "middle", 15, "bold")]
    for i, (lab, _, c) in enumerate(cum):
        y = 40 + i * row_h
        w = plot_w * float(c) / 100.0
        body.append(_text(left - 8, y + 18, lab.display, "end"))
        body.append(f'<rect x="{left}" y="{y:.2f}" width="{w:.2f}" height="{row_h - 8}" fill="{COLORS[lab]}"/>')
        body.append(_text(left + w + 6, y + 18, f"{c:.2f}%"))
    return _svg(W, H, body, "Cumulative sentiment share")


def _hbars(title: str, items: list[tuple[str, float]], value_fmt: str, scale_max: float | None = None) -> str:
    if not items:
        raise ValueError(f"{title}: no data to chart")
    W = 760
    row_h = 22
    H = 60 + row_h * len(items)
    left, right = 260, 70
    plot_w = W - left - right
    top = scale_max if scale_max is not None else max(v for _, v in items)
    top = top if top > 0 else 1.0
    body = [_text(W / 2, 24, title, "middle", 15, "bold")]
    for i, (name, v) in enumerate(items):
        y = 40 + i * row_h
        w = plot_w * v / top
        body.append(_text(left - 8, y + 14, name, "end", 11))
        body.append(f'<rect x="{left}" y="{y:.2f}" width="{w:.2f}" height="{row_h - 6}" fill="#4393c3"/>')
        body.append(_text(left + w + 6, y + 14, format(v, value_fmt), "start", 11))
    return _svg(W, H, body, title)


def terms_svg(terms: list[tuple[str, int]]) -> str:
    return _hbars("Most frequent terms", [(t, float(c)) for t, c in terms], ".0f")


def comparison_svg(rows: list[Mapping]) -> str:
    if not rows:
        raise ValueError("model comparison is empty; nothing to chart")
    items = [(f"{r['vectorizer']} | {r['model']} | {r['parameter']}", float(r["accuracy"])) for r in rows]
    return _hbars("Test accuracy by model", items, ".3f", 1.0)


def render_reports(out_dir, frequency: FrequencyTable | None = None, terms: list | None = None,
                   top_n: int | None = None, comparison: list[Mapping] | None = None,
                   cv: list[Mapping] | None = None) -> list[Path]:
    """Write every supplied table as CSV + JSON, and its chart under ``charts/``.

    ``comparison``/``cv`` passed as empty lists are an error rather than an
    empty file.
    """
    out = Path(out_dir)
    charts = out / "charts"
    try:
        charts.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    if comparison is not None and not comparison:
        raise ValueError("model comparison is empty; nothing to report")
    if cv is not None and not cv:
        raise ValueError("cross-validation results are empty; nothing to report")
    written = []
    if frequency is not None:
        cum = cumulative_distribution(frequency)
        write_frequency(out, frequency)
        write_cumulative(out, cum)
        _write(charts / "sentiment_distribution.svg", distribution_svg(cum))
        _write(charts / "cumulative.svg", cumulative_svg(cum))
        written += [out / "sentiment_frequency.csv", out / "cumulative.csv",
                    charts / "sentiment_distribution.svg", charts / "cumulative.svg"]
    if terms is not None:
        n = top_n if top_n is not None else len(terms)
        write_terms(out, terms, n)
        if terms:
            _write(charts / f"terms_top{n}.svg", terms_svg(terms))
        written.append(out / f"terms_top{n}.csv")
    if comparison is not None:
        write_comparison(out, comparison)
        _write(charts / "model_comparison.svg", comparison_svg(comparison))
        written += [out / "model_comparison.csv", charts / "model_comparison.svg"]
    if cv is not None:
        write_cv(out, cv)
        written.append(out / "cv_scores.csv")
    return written
