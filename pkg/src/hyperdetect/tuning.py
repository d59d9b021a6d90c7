"""Grid search with stratified k-fold cross-validation.

Every candidate is scored on identical fold assignments (paired
comparison); ties go to the earliest candidate in axis-major
enumeration order, so results are reproducible for a fixed seed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .evaluation import confusion, metrics
from .features import SparseVector
from .folds import stratified_fold_assignment
from .models import FAMILIES, make_params

METRICS = ("accuracy", "f1")

# Published best-known values sit inside every default axis, so the
# reference configuration is always reachable by search.
DEFAULT_AXES = {
    "lr": {
        "C": [0.1, 1.0, 10.0],
        "penalty": ["l2"],
        "solver": ["saga", "full_batch"],
        "max_iter": [100, 500],
    },
    "nb": {
        "alpha": [0.01, 0.1, 1.0],
        "fit_prior": [True, False],
    },
    "svm": {
        "C": [1.0, 10.0],
        "degree": [2, 3],
        "coef0": [0.0, 0.1],
        "gamma": ["scale"],
    },
    "rf": {
        "tree_count": [100, 200],
        "bootstrap": [True, False],
        "min_samples_split": [2, 10],
        "min_samples_leaf": [1, 2],
        "max_depth": [None, 20],
    },
}


@dataclass(frozen=True)
class GridSpec:
    model_type: str
    axes: dict[str, list]
    folds: int = 5
    metric: str = "f1"
    seed: int = 0

    def __post_init__(self):
        if self.model_type not in FAMILIES:
            raise ConfigError(f"unknown model family {self.model_type!r}")
        if not self.axes or any(not values for values in self.axes.values()):
            raise ConfigError("every grid axis needs at least one candidate value")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")

    def candidates(self) -> list[dict]:
        """Axis-major enumeration: first axis varies slowest."""
        names = list(self.axes)
        return [
            dict(zip(names, combo))
            for combo in itertools.product(*(self.axes[k] for k in names))
        ]


def default_grid(model_type: str, folds: int = 5, metric: str = "f1", seed: int = 0) -> GridSpec:
    if model_type not in DEFAULT_AXES:
        raise ConfigError(f"no default grid for model family {model_type!r}")
    return GridSpec(model_type=model_type, axes=DEFAULT_AXES[model_type],
                    folds=folds, metric=metric, seed=seed)


def load_grid_spec(path) -> GridSpec:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return GridSpec(
            model_type=payload["model_type"],
            axes=payload["axes"],
            folds=payload.get("folds", 5),
            metric=payload.get("metric", "f1"),
            seed=payload.get("seed", 0),
        )
    except KeyError as exc:
        raise ConfigError(f"grid spec file missing key {exc}") from exc


@dataclass
class GridResult:
    model_type: str
    metric: str
    best_params: dict
    best_score: float
    table: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "metric": self.metric,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "table": self.table,
        }

    def format_table(self) -> str:
        param_names = list(self.best_params)
        header = param_names + [f"fold{j}" for j in range(len(self.table[0]["fold_scores"]))] + ["mean"]
        rows = []
        for entry in self.table:
            row = [repr(entry["params"][p]) for p in param_names]
            row += [f"{s:.4f}" for s in entry["fold_scores"]]
            row.append(f"{entry['mean_score']:.4f}")
            rows.append(row)
        widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
        lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
        lines += ["  ".join(c.ljust(widths[i]) for i, c in enumerate(row)) for row in rows]
        return "\n".join(lines)


def make_folds(n: int, folds: int, labels: Sequence, seed: int) -> np.ndarray:
    """Stratified fold ids, sizes within one of each other, deterministic."""
    if folds > n:
        raise ConfigError(f"cannot make {folds} folds from {n} samples")
    labels = list(labels)
    if len(labels) != n:
        raise DataError(f"{n} samples but {len(labels)} labels")
    return stratified_fold_assignment(labels, folds, seed)


def _score(metric: str, truth: np.ndarray, predicted: np.ndarray) -> float:
    report = metrics(confusion(truth.tolist(), predicted.tolist()))
    return getattr(report, metric)


def grid_search(
    grid: GridSpec, vectors: Sequence[SparseVector], labels: Sequence[int]
) -> GridResult:
    """Evaluate every candidate on shared folds; best mean score wins."""
    y = np.asarray([int(v) for v in labels])
    assignment = make_folds(len(y), grid.folds, y.tolist(), grid.seed)
    for fold in range(grid.folds):
        train_classes = set(y[assignment != fold].tolist())
        for cls in (0, 1):
            if cls not in train_classes:
                raise DataError(
                    f"fold {fold} leaves no class-{cls} examples to train on; "
                    "use fewer folds or more data"
                )

    vectors = list(vectors)
    table: list[dict] = []
    best_index = -1
    best_score = -np.inf
    for index, candidate in enumerate(grid.candidates()):
        params = make_params(grid.model_type, **candidate)
        _, fit_fn = FAMILIES[grid.model_type]
        fold_scores = []
        for fold in range(grid.folds):
            held = assignment == fold
            train_vecs = [v for v, h in zip(vectors, held) if not h]
            held_vecs = [v for v, h in zip(vectors, held) if h]
            model = fit_fn(train_vecs, y[~held].tolist(), params)
            predicted = np.argmax(model.predict_proba(held_vecs), axis=1)
            fold_scores.append(_score(grid.metric, y[held], predicted))
        mean_score = float(np.mean(fold_scores))
        table.append({"params": candidate, "fold_scores": fold_scores, "mean_score": mean_score})
        if mean_score > best_score:
            best_score = mean_score
            best_index = index

    return GridResult(
        model_type=grid.model_type,
        metric=grid.metric,
        best_params=table[best_index]["params"],
        best_score=best_score,
        table=table,
    )
