"""Weak sentiment labels: lexicon polarity in [-1, 1] mapped onto seven classes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import Comment, CorpusFormatError, iter_records
from .preprocess import LemmaRules, Preprocessor, StopwordList

NEGATION_WINDOW = 2
NEGATION_FACTOR = -0.5


class SentimentLabel(str, Enum):
    """Seven classes, declared from most negative to most positive."""

    StronglyNegative = "StronglyNegative"
    Negative = "Negative"
    WeaklyNegative = "WeaklyNegative"
    Neutral = "Neutral"
    WeaklyPositive = "WeaklyPositive"
    Positive = "Positive"
    StronglyPositive = "StronglyPositive"

    @property
    def rank(self) -> int:
        return _RANK[self]

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @property
    def sign(self) -> int:
        return (self.rank > 3) - (self.rank < 3)

    def __str__(self):
        return self.value


_RANK = {label: i for i, label in enumerate(SentimentLabel)}
_DISPLAY = {
    label: "".join(" " + ch if ch.isupper() and i else ch for i, ch in enumerate(label.value))
    for label in SentimentLabel
}

# Row order of the frequency table.
TABLE_ORDER = (
    SentimentLabel.Neutral,
    SentimentLabel.WeaklyPositive,
    SentimentLabel.Positive,
    SentimentLabel.StronglyPositive,
    SentimentLabel.WeaklyNegative,
    SentimentLabel.Negative,
    SentimentLabel.StronglyNegative,
)


@dataclass(frozen=True)
class LexiconEntry:
    term: str
    polarity: float
    intensity: float = 1.0
    is_negator: bool = False

    def __post_init__(self):
        if not self.term:
            raise ValueError("lexicon term is empty")
        if not -1.0 <= self.polarity <= 1.0:
            raise ValueError(f"{self.term!r}: polarity {self.polarity} outside [-1, 1]")
        if not self.intensity > 0:
            raise ValueError(f"{self.term!r}: intensity must be positive")


class Lexicon:
    """Unigram and bigram polarity entries plus negator flags. Immutable once built."""

    def __init__(self, entries: Iterable[LexiconEntry]):
        self._entries: dict[str, LexiconEntry] = {}
        for e in entries:
            if len(e.term.split()) > 2:
                raise ValueError(f"{e.term!r}: only unigrams and bigrams are supported")
            self._entries[" ".join(e.term.lower().split())] = e
        self.negators = frozenset(t for t, e in self._entries.items() if e.is_negator)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, term):
        return term in self._entries

    def get(self, term: str) -> LexiconEntry | None:
        return self._entries.get(term)

    def entries(self) -> list[LexiconEntry]:
        return list(self._entries.values())

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<lexicon>") -> "Lexicon":
        entries = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) != 4:
                raise ValueError(f"{source}: line {lineno}: expected 4 tab-separated fields")
            term, pol, inten, neg = parts
            try:
                entries.append(LexiconEntry(term.strip().lower(), float(pol), float(inten),
                                            neg.strip() in ("1", "true", "True")))
            except ValueError as exc:
                raise ValueError(f"{source}: line {lineno}: {exc}") from None
        return cls(entries)

    @classmethod
    def builtin(cls) -> "Lexicon":
        text = resources.files("vaxsent").joinpath("data").joinpath("lexicon.tsv").read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines(), "builtin lexicon")

    @classmethod
    def load(cls, source="builtin") -> "Lexicon":
        if source == "builtin":
            return cls.builtin()
        path = Path(source)
        return cls.from_lines(path.read_text(encoding="utf-8").splitlines(), str(path))


@dataclass(frozen=True)
class PolarityScore:
    value: float
    matched_terms: int = 0

    def __post_init__(self):
        if not -1.0 <= self.value <= 1.0:
            raise ValueError(f"polarity {self.value} outside [-1, 1]")
        if self.matched_terms < 0:
            raise ValueError("matched_terms must be >= 0")


def score_polarity(tokens: Sequence[str], lexicon: Lexicon) -> PolarityScore:
    """Mean of matched entries' polarity x intensity, clamped to [-1, 1].

    Matching runs left to right, trying a bigram before the unigram at each
    position, without overlaps. A negator among the two tokens just before a
    match multiplies that contribution by -0.5. Negators themselves do not
    count as matches.
    """
    contributions = []
    i = 0
    n = len(tokens)
    while i < n:
        entry = None
        width = 1
        if i + 1 < n:
            entry = lexicon.get(tokens[i] + " " + tokens[i + 1])
            width = 2
        if entry is None:
            entry = lexicon.get(tokens[i])
            width = 1
        if entry is None or entry.is_negator:
            i += 1
            continue
        c = entry.polarity * entry.intensity
        if any(t in lexicon.negators for t in tokens[max(0, i - NEGATION_WINDOW):i]):
            c *= NEGATION_FACTOR
        contributions.append(c)
        i += width
    if not contributions:
        return PolarityScore(0.0, 0)
    mean = math.fsum(contributions) / len(contributions)
    return PolarityScore(min(1.0, max(-1.0, mean)), len(contributions))


def label_from_polarity(s: PolarityScore | float) -> SentimentLabel:
    """Threshold mapping; positive bins own their upper edge, negative bins their lower."""
    v = s.value if isinstance(s, PolarityScore) else float(s)
    if not -1.0 <= v <= 1.0:  # also rejects NaN
        raise ValueError(f"polarity {v} outside [-1, 1]")
    if v == 0:
        return SentimentLabel.Neutral
    if v > 0:
        if v <= 0.3:
            return SentimentLabel.WeaklyPositive
        if v <= 0.6:
            return SentimentLabel.Positive
        return SentimentLabel.StronglyPositive
    if v >= -0.3:
        return SentimentLabel.WeaklyNegative
    if v >= -0.6:
        return SentimentLabel.Negative
    return SentimentLabel.StronglyNegative


@dataclass(frozen=True)
class AnnotatedComment:
    comment: Comment
    tokens: tuple[str, ...]
    polarity: PolarityScore
    label: SentimentLabel


def annotate_corpus(comments: Sequence[Comment], lexicon: Lexicon,
                    sw: StopwordList | None = None, rules: LemmaRules | None = None) -> list[AnnotatedComment]:
    prep = Preprocessor(sw, rules)
    out = []
    for c in comments:
        tokens = tuple(prep(c.body))
        pol = score_polarity(tokens, lexicon)
        out.append(AnnotatedComment(c, tokens, pol, label_from_polarity(pol)))
    return out


def save_annotated(annotated: Iterable[AnnotatedComment], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for a in annotated:
            rec = a.comment.to_record()
            rec["polarity"] = a.polarity.value
            rec["matched_terms"] = a.polarity.matched_terms
            rec["label"] = a.label.value
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_annotated(path, sw: StopwordList | None = None,
                   rules: LemmaRules | None = None) -> list[AnnotatedComment]:
    """Read an annotated corpus; tokens are recomputed (preprocessing is deterministic)."""
    prep = Preprocessor(sw, rules)
    out = []
    seen = set()
    for lineno, rec in iter_records(path):
        try:
            c = Comment.from_record(rec)
            label = SentimentLabel(rec["label"])
            pol = float(rec["polarity"])
            score = PolarityScore(pol, int(rec["matched_terms"]))
            tokens = tuple(prep(c.body))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from None
        if c.comment_id in seen:
            raise CorpusFormatError(f"{path}: line {lineno}: duplicate comment_id {c.comment_id!r}")
        if label_from_polarity(score) is not label:
            raise CorpusFormatError(f"{path}: line {lineno}: label {label.value} does not match polarity {pol}")
        seen.add(c.comment_id)
        out.append(AnnotatedComment(c, tokens, score, label))
    return out
