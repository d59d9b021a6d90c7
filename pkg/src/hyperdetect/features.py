"""TF-IDF vectorization fitted on training data only.

idf(t) = ln((1+N)/(1+df(t))) + 1 with N the number of fitted documents,
term frequency is the raw in-document count, and vectors are L2
normalized by default.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, Document
from .errors import DataError, FitError


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, value) pairs over a fixed dimension; zeros never stored."""

    entries: tuple[tuple[int, float], ...]
    dimension: int

    def __post_init__(self):
        prev = -1
        for index, value in self.entries:
            if index <= prev or index >= self.dimension:
                raise DataError("sparse vector indices must be strictly increasing and < dimension")
            if value == 0.0:
                raise DataError("sparse vector must not store zero values")
            prev = index

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        for index, value in self.entries:
            dense[index] = value
        return dense

    def dot(self, other: "SparseVector") -> float:
        if self.dimension != other.dimension:
            raise DataError("sparse vector dimension mismatch")
        result = 0.0
        i, j = 0, 0
        a, b = self.entries, other.entries
        while i < len(a) and j < len(b):
            if a[i][0] == b[j][0]:
                result += a[i][1] * b[j][1]
                i += 1
                j += 1
            elif a[i][0] < b[j][0]:
                i += 1
            else:
                j += 1
        return result

    def norm(self) -> float:
        return math.sqrt(sum(v * v for _, v in self.entries))


def to_csr(vectors: Sequence[SparseVector]) -> sparse.csr_matrix:
    if not vectors:
        raise DataError("cannot build a matrix from zero vectors")
    dimension = vectors[0].dimension
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vectors:
        if vec.dimension != dimension:
            raise DataError("sparse vector dimension mismatch")
        for index, value in vec.entries:
            indices.append(index)
            data.append(value)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(len(vectors), dimension),
    )


def to_dense(vectors: Sequence[SparseVector]) -> np.ndarray:
    return to_csr(vectors).toarray()


@dataclass(frozen=True)
class TfidfConfig:
    min_df: int = 1
    max_features: int | None = None
    l2_normalize: bool = True


class TfidfModel:
    """Fitted vocabulary and idf weights; immutable after fit."""

    def __init__(self, vocabulary: dict[str, int], idf: np.ndarray, config: TfidfConfig):
        if sorted(vocabulary.values()) != list(range(len(vocabulary))):
            raise DataError("vocabulary indices must form 0..V-1 with no gaps")
        self.vocabulary = dict(vocabulary)
        self.idf = np.asarray(idf, dtype=float)
        if np.any(self.idf <= 0):
            raise DataError("idf values must be positive")
        self.config = config

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def to_dict(self) -> dict:
        return {
            "vocabulary": self.vocabulary,
            "idf": self.idf.tolist(),
            "config": {
                "min_df": self.config.min_df,
                "max_features": self.config.max_features,
                "l2_normalize": self.config.l2_normalize,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TfidfModel":
        cfg = payload["config"]
        return cls(
            vocabulary=payload["vocabulary"],
            idf=np.asarray(payload["idf"], dtype=float),
            config=TfidfConfig(
                min_df=cfg["min_df"],
                max_features=cfg["max_features"],
                l2_normalize=cfg["l2_normalize"],
            ),
        )


def _require_tokens(docs: Iterable[Document]):
    for doc in docs:
        if doc.tokens is None:
            raise DataError(f"document {doc.id} has no tokens; preprocess the corpus first")


def fit_vocabulary(train: Corpus, config: TfidfConfig | None = None) -> TfidfModel:
    """Build the vocabulary and idf table from a preprocessed corpus.

    Tokens need document frequency >= min_df; when max_features is set
    the highest-total-frequency tokens win, ties broken lexicographically.
    Vocabulary indices follow lexicographic token order.
    """
    config = config or TfidfConfig()
    if len(train) == 0:
        raise FitError("cannot fit a vectorizer on an empty corpus")
    _require_tokens(train)

    df: Counter = Counter()
    total: Counter = Counter()
    for doc in train:
        counts = Counter(doc.tokens)
        total.update(counts)
        df.update(counts.keys())

    selected = [t for t, d in df.items() if d >= config.min_df]
    if config.max_features is not None and len(selected) > config.max_features:
        selected.sort(key=lambda t: (-total[t], t))
        selected = selected[: config.max_features]
    selected.sort()
    if not selected:
        raise FitError("effective vocabulary is empty; lower min_df or check preprocessing")

    vocabulary = {t: i for i, t in enumerate(selected)}
    n = len(train)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in selected])
    return TfidfModel(vocabulary, idf, config)


def transform_tokens(model: TfidfModel, tokens: Sequence[str]) -> SparseVector:
    counts: Counter = Counter()
    for token in tokens:
        index = model.vocabulary.get(token)
        if index is not None:
            counts[index] += 1
    entries = [(i, counts[i] * model.idf[i]) for i in sorted(counts)]
    if model.config.l2_normalize and entries:
        norm = math.sqrt(sum(v * v for _, v in entries))
        if norm > 0:
            entries = [(i, v / norm) for i, v in entries]
    return SparseVector(tuple(entries), model.dimension)


def transform(model: TfidfModel, doc: Document) -> SparseVector:
    """Vectorize one preprocessed document; out-of-vocabulary tokens are ignored."""
    if doc.tokens is None:
        raise DataError(f"document {doc.id} has no tokens; preprocess it first")
    return transform_tokens(model, doc.tokens)


def transform_corpus(model: TfidfModel, corpus: Corpus) -> list[SparseVector]:
    return [transform(model, doc) for doc in corpus]
