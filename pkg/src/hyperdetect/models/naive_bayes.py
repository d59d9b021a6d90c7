"""Multinomial naive Bayes over non-negative (TF-IDF) feature values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ..errors import ConfigError, DataError, FitError
from ..features import SparseVector, to_csr


@dataclass(frozen=True)
class NaiveBayesParams:
    alpha: float = 0.01
    fit_prior: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")


@dataclass
class NaiveBayesModel:
    model_type = "naive_bayes"

    params: NaiveBayesParams
    log_prior: np.ndarray          # shape (2,)
    feature_log_likelihood: np.ndarray  # shape (2, n_features)
    n_features: int
    training_doc_ids: tuple[str, ...] | None = field(default=None, repr=False)

    def predict_proba(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        X = to_csr(vectors)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        if X.nnz and X.data.min() < 0:
            raise DataError("naive Bayes requires non-negative feature values")
        joint = X @ self.feature_log_likelihood.T + self.log_prior
        return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))

    def to_params_dict(self) -> dict:
        return {
            "alpha": self.params.alpha,
            "fit_prior": self.params.fit_prior,
            "log_prior": self.log_prior.tolist(),
            "feature_log_likelihood": self.feature_log_likelihood.tolist(),
            "n_features": self.n_features,
            "training_doc_ids": list(self.training_doc_ids) if self.training_doc_ids else None,
        }

    @classmethod
    def from_params_dict(cls, d: dict) -> "NaiveBayesModel":
        ids = d.get("training_doc_ids")
        return cls(
            params=NaiveBayesParams(alpha=d["alpha"], fit_prior=d["fit_prior"]),
            log_prior=np.asarray(d["log_prior"], dtype=float),
            feature_log_likelihood=np.asarray(d["feature_log_likelihood"], dtype=float),
            n_features=int(d["n_features"]),
            training_doc_ids=tuple(ids) if ids else None,
        )


def fit_naive_bayes(
    vectors: Sequence[SparseVector],
    labels: Sequence[int],
    params: NaiveBayesParams | None = None,
) -> NaiveBayesModel:
    """Fit the multinomial model.

    Per-class feature log-likelihood is
    ln((count(f,c) + alpha) / (sum_f count(f,c) + alpha*V)); the prior
    is the class frequency, or uniform when fit_prior is off.
    """
    params = params or NaiveBayesParams()
    X = to_csr(vectors)
    y = np.asarray([int(v) for v in labels])
    if len(y) != X.shape[0]:
        raise DataError("vectors and labels disagree in length")
    if X.nnz and X.data.min() < 0:
        raise DataError("naive Bayes requires non-negative feature values")
    present = set(np.unique(y).tolist())
    if not present <= {0, 1}:
        raise DataError(f"labels must be 0/1, got {sorted(present)}")
    if len(present) < 2:
        raise FitError("training set must contain both classes")

    n_features = X.shape[1]
    counts = np.vstack([
        np.asarray(X[y == 0].sum(axis=0)).ravel(),
        np.asarray(X[y == 1].sum(axis=0)).ravel(),
    ])
    smoothed = counts + params.alpha
    log_likelihood = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))

    if params.fit_prior:
        class_counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=float)
        log_prior = np.log(class_counts / class_counts.sum())
    else:
        log_prior = np.log(np.array([0.5, 0.5]))

    return NaiveBayesModel(
        params=params,
        log_prior=log_prior,
        feature_log_likelihood=log_likelihood,
        n_features=n_features,
    )
