"""Vocabulary fitting plus count (bag-of-words) and TF-IDF vectorization."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class EmptyVocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    term_to_index: dict[str, int]
    document_frequency: tuple[int, ...]
    n_documents: int

    def __post_init__(self):
        terms = self.terms
        if sorted(terms) != terms:
            raise ValueError("vocabulary indices must follow lexicographic term order")
        if sorted(self.term_to_index.values()) != list(range(len(self))):
            raise ValueError("vocabulary indices must be 0..V-1")
        if len(self.document_frequency) != len(self):
            raise ValueError("document_frequency length differs from vocabulary size")
        if any(not 1 <= df <= self.n_documents for df in self.document_frequency):
            raise ValueError("document frequencies must lie in [1, n_documents]")

    def __len__(self):
        return len(self.term_to_index)

    @property
    def terms(self) -> list[str]:
        return sorted(self.term_to_index, key=self.term_to_index.__getitem__)

    def df(self, term: str) -> int:
        return self.document_frequency[self.term_to_index[term]]

    def idf(self) -> np.ndarray:
        """Smoothed idf: ln((1 + N) / (1 + df)) + 1."""
        df = np.asarray(self.document_frequency, dtype=float)
        return np.log((1.0 + self.n_documents) / (1.0 + df)) + 1.0

    def save(self, path) -> None:
        lines = [f"n_documents\t{self.n_documents}"]
        for term in self.terms:
            lines.append(f"{term}\t{self.term_to_index[term]}\t{self.df(term)}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        key, _, n = lines[0].partition("\t")
        if key != "n_documents":
            raise ValueError(f"{path}: line 1: expected n_documents header")
        mapping, dfs = {}, []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected term, index, df")
            mapping[parts[0]] = int(parts[1])
            dfs.append((int(parts[1]), int(parts[2])))
        return cls(mapping, tuple(df for _, df in sorted(dfs)), int(n))


def build_vocabulary(docs: Sequence[Sequence[str]], min_df: int = 1) -> Vocabulary:
    if not docs:
        raise ValueError("cannot build a vocabulary from zero documents")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    terms = sorted(t for t, c in df.items() if c >= min_df)
    if not terms:
        raise EmptyVocabularyError("empty vocabulary")
    return Vocabulary({t: i for i, t in enumerate(terms)}, tuple(df[t] for t in terms), len(docs))


@dataclass(frozen=True)
class SparseVector:
    dimension: int
    entries: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        prev = -1
        for i, w in self.entries:
            if not prev < i < self.dimension:
                raise ValueError("indices must be strictly increasing and below dimension")
            if w == 0:
                raise ValueError("explicit zero weight in sparse vector")
            prev = i

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.entries]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.entries]

    def norm(self) -> float:
        return math.sqrt(math.fsum(w * w for _, w in self.entries))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        for i, w in self.entries:
            out[i] = w
        return out


def _counts(doc: Iterable[str], v: Vocabulary) -> list[tuple[int, int]]:
    c = Counter(v.term_to_index[t] for t in doc if t in v.term_to_index)
    return sorted(c.items())


def count_vectorize(doc: Sequence[str], v: Vocabulary) -> SparseVector:
    return SparseVector(len(v), tuple((i, float(n)) for i, n in _counts(doc, v)))


def tfidf_vectorize(doc: Sequence[str], v: Vocabulary, idf: np.ndarray | None = None) -> SparseVector:
    """Raw counts times smoothed idf, then L2-normalized (zero vectors left alone)."""
    idf = v.idf() if idf is None else idf
    raw = [(i, n * float(idf[i])) for i, n in _counts(doc, v)]
    norm = math.sqrt(math.fsum(w * w for _, w in raw))
    if norm == 0:
        return SparseVector(len(v))
    return SparseVector(len(v), tuple((i, w / norm) for i, w in raw))


@dataclass
class FeatureMatrix:
    """Rows of a shared feature space (CSR) with their parallel labels."""

    X: sp.csr_matrix
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.X = sp.csr_matrix(self.X, dtype=float)
        if self.X.shape[0] != len(self.labels):
            raise ValueError(f"{self.X.shape[0]} rows but {len(self.labels)} labels")

    def __len__(self):
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    @property
    def rows(self) -> list[SparseVector]:
        out = []
        for r in range(self.X.shape[0]):
            lo, hi = self.X.indptr[r], self.X.indptr[r + 1]
            pairs = sorted(zip(self.X.indices[lo:hi].tolist(), self.X.data[lo:hi].tolist()))
            out.append(SparseVector(self.dimension, tuple((i, w) for i, w in pairs if w != 0)))
        return out

    def subset(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureMatrix(self.X[idx], [self.labels[i] for i in idx])

    @classmethod
    def from_rows(cls, rows: Sequence[SparseVector], labels: Sequence, dimension: int | None = None) -> "FeatureMatrix":
        if dimension is None:
            if not rows:
                raise ValueError("dimension required for an empty row list")
            dimension = rows[0].dimension
        indptr, indices, data = [0], [], []
        for r in rows:
            if r.dimension != dimension:
                raise ValueError("rows have different dimensions")
            indices.extend(r.indices)
            data.extend(r.weights)
            indptr.append(len(indices))
        X = sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64),
                           np.asarray(indptr, dtype=np.int64)), shape=(len(rows), dimension))
        return cls(X, list(labels))


VECTORIZERS = ("count", "tfidf")


def vectorize(docs: Sequence[Sequence[str]], v: Vocabulary, scheme: str) -> list[SparseVector]:
    if scheme == "count":
        return [count_vectorize(d, v) for d in docs]
    if scheme == "tfidf":
        idf = v.idf()
        return [tfidf_vectorize(d, v, idf) for d in docs]
    raise ValueError(f"unknown vectorizer {scheme!r}; expected one of {VECTORIZERS}")


def feature_matrix(docs: Sequence[Sequence[str]], labels: Sequence, scheme: str,
                   min_df: int = 1, vocabulary: Vocabulary | None = None) -> tuple[FeatureMatrix, Vocabulary]:
    v = vocabulary if vocabulary is not None else build_vocabulary(docs, min_df)
    return FeatureMatrix.from_rows(vectorize(docs, v, scheme), labels, len(v)), v
