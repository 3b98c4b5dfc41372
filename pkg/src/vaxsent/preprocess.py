"""Text normalization: tokenize -> drop stop words -> noun-mode lemmatize.

Romanized Hindi tokens (ki, kya, hai, ...) pass through untouched; nothing in
here knows about Hinglish beyond an optional extra stop-word file.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"(?<![\w/])(?:@[\w.-]+|/?u/[\w-]+)", re.IGNORECASE)
SPECIAL_NEG_RE = re.compile(r"\b(can|won|shan|ain)['’]t\b")
NEG_RE = re.compile(r"n['’]t\b")
_SPECIAL_NEG = {"can": "can not", "won": "will not", "shan": "shall not", "ain": "is not"}

NEGATORS = frozenset({"not", "no", "never", "nor", "neither", "nahi", "nahin"})


def _is_token_char(ch: str) -> bool:
    # letters, combining marks (Devanagari matras) and digits
    return unicodedata.category(ch)[0] in "LMN"


def tokenize(text: str) -> list[str]:
    """Lowercase, strip URLs/mentions/emoji/punctuation, split into word tokens.

    Contractions ending in n't are expanded to ``not`` so the negation
    window in the scorer can see them.
    """
    if not text:
        return []
    text = text.lower()
    text = URL_RE.sub(" ", text)
    text = MENTION_RE.sub(" ", text)
    text = SPECIAL_NEG_RE.sub(lambda m: " " + _SPECIAL_NEG[m.group(1)] + " ", text)
    text = NEG_RE.sub(" not", text)
    tokens = []
    buf = []
    for ch in text:
        if _is_token_char(ch):
            buf.append(ch)
        elif buf:
            tokens.append("".join(buf))
            buf = []
    if buf:
        tokens.append("".join(buf))
    return tokens


def _data_lines(name: str) -> list[str]:
    text = resources.files("vaxsent").joinpath("data").joinpath(name).read_text(encoding="utf-8")
    return text.splitlines()


def _read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _entries(lines: Iterable[str]) -> Iterable[str]:
    for line in lines:
        if line.strip() and not line.lstrip().startswith("#"):
            yield line.rstrip("\r\n")


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]
    source: str = "builtin"

    def __post_init__(self):
        bad = [w for w in self.words if w != w.lower() or not w]
        if bad:
            raise ValueError(f"stop words must be lowercase and non-empty: {sorted(bad)[:5]}")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self):
        return len(self.words)

    def union(self, other: Iterable[str], source: str | None = None) -> "StopwordList":
        return StopwordList(self.words | frozenset(other), source or self.source)

    def without(self, words: Iterable[str]) -> "StopwordList":
        return StopwordList(self.words - frozenset(words), self.source)

    @classmethod
    def builtin(cls) -> "StopwordList":
        return cls(frozenset(w.strip() for w in _entries(_data_lines("stopwords_en.txt"))), "builtin")

    @classmethod
    def from_file(cls, path) -> "StopwordList":
        words = frozenset(w.strip().lower() for w in _entries(_read_lines(path)))
        return cls(words, str(path))

    @classmethod
    def load(cls, source: str = "builtin", extra: str | None = None) -> "StopwordList":
        """Builtin or file list, optionally merged with a second (e.g. Hinglish) file.

        Negators are always dropped so the scorer keeps them.
        """
        sw = cls.builtin() if source == "builtin" else cls.from_file(source)
        if extra:
            sw = sw.union(cls.from_file(extra).words)
        return sw.without(NEGATORS)


@dataclass(frozen=True)
class LemmaRules:
    suffix_rules: tuple[tuple[str, str], ...]
    exceptions: dict[str, str] = field(default_factory=dict)
    min_length: int = 3

    def __post_init__(self):
        for form, lemma in self.exceptions.items():
            if not form or not lemma:
                raise ValueError(f"empty lemma exception entry: {form!r} -> {lemma!r}")
        for suffix, _ in self.suffix_rules:
            if not suffix:
                raise ValueError("empty suffix in lemma rules")

    @classmethod
    def builtin(cls) -> "LemmaRules":
        return cls(
            suffix_rules=tuple(_pairs(_data_lines("lemma_suffixes.tsv"))),
            exceptions=dict(_pairs(_data_lines("lemma_exceptions.tsv"))),
        )

    @classmethod
    def from_files(cls, suffix_path=None, exceptions_path=None) -> "LemmaRules":
        base = cls.builtin()
        rules = tuple(_pairs(_read_lines(suffix_path))) if suffix_path else base.suffix_rules
        exc = dict(_pairs(_read_lines(exceptions_path))) if exceptions_path else base.exceptions
        return cls(rules, exc)


def _pairs(lines: Iterable[str]) -> Iterable[tuple[str, str]]:
    for line in _entries(lines):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"expected two tab-separated fields: {line!r}")
        yield parts[0].strip(), parts[1].strip()


def remove_stopwords(tokens: list[str], sw: StopwordList) -> list[str]:
    return [t for t in tokens if t not in sw.words]


def lemmatize(token: str, rules: LemmaRules) -> str:
    hit = rules.exceptions.get(token)
    if hit is not None:
        return hit
    for suffix, repl in rules.suffix_rules:
        if token.endswith(suffix):
            out = token[: len(token) - len(suffix)] + repl
            if len(out) >= rules.min_length:
                return out
    return token


def preprocess(text: str, sw: StopwordList, rules: LemmaRules) -> list[str]:
    return [lemmatize(t, rules) for t in remove_stopwords(tokenize(text), sw)]


class Preprocessor:
    """Bundles a stop-word list and lemma rules; callable on raw text."""

    def __init__(self, sw: StopwordList | None = None, rules: LemmaRules | None = None):
        self.sw = sw if sw is not None else StopwordList.load()
        self.rules = rules if rules is not None else LemmaRules.builtin()
        self._cache: dict[str, str] = {}

    def lemma(self, token: str) -> str:
        out = self._cache.get(token)
        if out is None:
            out = self._cache[token] = lemmatize(token, self.rules)
        return out

    def __call__(self, text: str) -> list[str]:
        return [self.lemma(t) for t in remove_stopwords(tokenize(text), self.sw)]
