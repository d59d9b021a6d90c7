"""Probabilistic classifiers sharing one contract.

Every fitted model exposes predict_proba returning rows
[p(class 0), p(class 1)] that sum to 1; class index order is fixed
toolkit-wide (0 = NotHyperpartisan, 1 = Hyperpartisan).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ConfigError
from ..features import SparseVector
from .forest import RandomForestModel, RandomForestParams, fit_random_forest
from .io import load_model, save_model
from .logreg import (
    LogisticRegressionModel,
    LogisticRegressionParams,
    fit_logistic_regression,
)
from .naive_bayes import NaiveBayesModel, NaiveBayesParams, fit_naive_bayes
from .remote import RemoteClassifier
from .svm import SvmModel, SvmParams, fit_svm, poly_kernel

# Short names used by the CLI and grid specs.
FAMILIES = {
    "lr": (LogisticRegressionParams, fit_logistic_regression),
    "nb": (NaiveBayesParams, fit_naive_bayes),
    "svm": (SvmParams, fit_svm),
    "rf": (RandomForestParams, fit_random_forest),
}


def make_params(family: str, **overrides):
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}")
    params_cls, _ = FAMILIES[family]
    return params_cls(**overrides)


def fit_model(family: str, vectors: Sequence[SparseVector], labels, params=None):
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}")
    _, fit_fn = FAMILIES[family]
    return fit_fn(vectors, labels, params)


def predict_proba(model, inputs) -> np.ndarray:
    """Uniform prediction entry point; dimension checks live in the models."""
    return model.predict_proba(inputs)


__all__ = [
    "FAMILIES",
    "LogisticRegressionModel",
    "LogisticRegressionParams",
    "NaiveBayesModel",
    "NaiveBayesParams",
    "RandomForestModel",
    "RandomForestParams",
    "RemoteClassifier",
    "SvmModel",
    "SvmParams",
    "fit_logistic_regression",
    "fit_model",
    "fit_naive_bayes",
    "fit_random_forest",
    "fit_svm",
    "load_model",
    "make_params",
    "poly_kernel",
    "predict_proba",
    "save_model",
]
