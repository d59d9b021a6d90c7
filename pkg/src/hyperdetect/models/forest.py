"""Random forest of Gini CART trees with per-node feature subsampling.

Every source of randomness comes from substreams derived from
(seed, tree_index), so refitting the same data with the same params is
bit-reproducible and, without bootstrap, invariant to row order.
Tie-breaks are fixed: lowest feature index, then lowest threshold, and
prediction ties resolve toward class 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DataError
from ..features import SparseVector, to_csr


@dataclass(frozen=True)
class RandomForestParams:
    tree_count: int = 200
    bootstrap: bool = False
    max_depth: int | None = None
    min_samples_split: int = 10
    min_samples_leaf: int = 1
    features_per_split: str | int = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.tree_count < 1:
            raise ConfigError("tree_count must be >= 1")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ConfigError("min_samples_split must be >= 2 and min_samples_leaf >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1 or None for unlimited")
        if isinstance(self.features_per_split, str) and self.features_per_split not in ("sqrt", "log2", "all"):
            raise ConfigError(f"unknown features_per_split rule {self.features_per_split!r}")
        if isinstance(self.features_per_split, int) and self.features_per_split < 1:
            raise ConfigError("features_per_split must be >= 1")


def _resolve_features_per_split(rule, n_features: int) -> int:
    if rule == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if rule == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    if rule == "all":
        return n_features
    return min(int(rule), n_features)


@dataclass
class _Tree:
    feature: list[int] = field(default_factory=list)     # -1 marks a leaf
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    probs: list[list[float]] = field(default_factory=list)

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.probs.append([0.0, 0.0])
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty((len(X), 2))
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            if len(rows) == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[rows] = self.probs[node]
            else:
                go_left = X[rows, f] <= self.threshold[node]
                stack.append((self.left[node], rows[go_left]))
                stack.append((self.right[node], rows[~go_left]))
        return out


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray, candidates: np.ndarray,
                min_leaf: int) -> tuple[int, float, float] | None:
    """Lowest weighted-Gini (feature, threshold) over candidate features.

    Thresholds are midpoints between consecutive distinct values, so the
    search depends only on the row set, never on row order.
    """
    n = len(rows)
    best: tuple[float, int, float] | None = None
    for f in np.sort(candidates):
        col = X[rows, f]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        ones = np.cumsum(y[rows][order])
        cut = np.flatnonzero(vals[:-1] < vals[1:])  # left part is [0..i]
        if len(cut) == 0:
            continue
        n_left = cut + 1
        n_right = n - n_left
        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        cut = cut[valid]
        n_left = n_left[valid]
        n_right = n_right[valid]
        c1_left = ones[cut]
        c0_left = n_left - c1_left
        c1_right = ones[-1] - c1_left
        c0_right = n_right - c1_right
        left_term = n_left - (c0_left**2 + c1_left**2) / n_left
        right_term = n_right - (c0_right**2 + c1_right**2) / n_right
        weighted = left_term + right_term
        pos = int(np.argmin(weighted))  # first minimum = lowest threshold
        score = float(weighted[pos]) / n
        if best is None or score < best[0]:
            i = int(cut[pos])
            best = (score, int(f), float((vals[i] + vals[i + 1]) / 2.0))
    if best is None:
        return None
    return best[1], best[2], best[0]


def _grow_tree(X: np.ndarray, y: np.ndarray, params: RandomForestParams,
               rng: np.random.Generator, n_candidates: int) -> _Tree:
    # Iterative DFS (left child first) so deep chains cannot overflow the
    # Python stack; the rng is consumed in node pre-order.
    tree = _Tree()
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(len(y)), 0, -1, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        node = tree.add_node()
        if parent >= 0:
            if is_left:
                tree.left[parent] = node
            else:
                tree.right[parent] = node
        n = len(rows)
        c1 = int(y[rows].sum())
        tree.probs[node] = [(n - c1) / n, c1 / n]
        if (
            c1 == 0 or c1 == n
            or n < params.min_samples_split
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            continue
        candidates = rng.choice(X.shape[1], size=n_candidates, replace=False)
        found = _best_split(X, y, rows, candidates, params.min_samples_leaf)
        if found is None:
            continue
        feature, threshold, _ = found
        go_left = X[rows, feature] <= threshold
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        stack.append((rows[~go_left], depth + 1, node, False))
        stack.append((rows[go_left], depth + 1, node, True))
    return tree


@dataclass
class RandomForestModel:
    model_type = "random_forest"

    params: RandomForestParams
    trees: list[_Tree]
    n_features: int
    training_doc_ids: tuple[str, ...] | None = field(default=None, repr=False)

    def predict_proba(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        X = to_csr(vectors).toarray()
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        total = np.zeros((len(X), 2))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def to_params_dict(self) -> dict:
        return {
            "tree_count": self.params.tree_count,
            "bootstrap": self.params.bootstrap,
            "max_depth": self.params.max_depth,
            "min_samples_split": self.params.min_samples_split,
            "min_samples_leaf": self.params.min_samples_leaf,
            "features_per_split": self.params.features_per_split,
            "seed": self.params.seed,
            "n_features": self.n_features,
            "trees": [
                {
                    "feature": tree.feature,
                    "threshold": tree.threshold,
                    "left": tree.left,
                    "right": tree.right,
                    "probs": tree.probs,
                }
                for tree in self.trees
            ],
            "training_doc_ids": list(self.training_doc_ids) if self.training_doc_ids else None,
        }

    @classmethod
    def from_params_dict(cls, d: dict) -> "RandomForestModel":
        params = RandomForestParams(
            tree_count=d["tree_count"], bootstrap=d["bootstrap"], max_depth=d["max_depth"],
            min_samples_split=d["min_samples_split"], min_samples_leaf=d["min_samples_leaf"],
            features_per_split=d["features_per_split"], seed=d["seed"],
        )
        trees = [
            _Tree(
                feature=[int(v) for v in t["feature"]],
                threshold=[float(v) for v in t["threshold"]],
                left=[int(v) for v in t["left"]],
                right=[int(v) for v in t["right"]],
                probs=[[float(p) for p in pair] for pair in t["probs"]],
            )
            for t in d["trees"]
        ]
        ids = d.get("training_doc_ids")
        return cls(
            params=params,
            trees=trees,
            n_features=int(d["n_features"]),
            training_doc_ids=tuple(ids) if ids else None,
        )


def fit_random_forest(
    vectors: Sequence[SparseVector],
    labels: Sequence[int],
    params: RandomForestParams | None = None,
) -> RandomForestModel:
    params = params or RandomForestParams()
    X = to_csr(vectors).toarray()
    y = np.asarray([int(v) for v in labels])
    if len(y) != X.shape[0]:
        raise DataError("vectors and labels disagree in length")
    if len(y) == 0:
        raise DataError("cannot fit a forest on empty input")
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise DataError("labels must be 0/1")

    n_candidates = _resolve_features_per_split(params.features_per_split, X.shape[1])
    trees = []
    for tree_index in range(params.tree_count):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(params.seed, tree_index)))
        if params.bootstrap:
            sample = rng.integers(0, len(y), size=len(y))
            Xt, yt = X[sample], y[sample]
        else:
            Xt, yt = X, y
        trees.append(_grow_tree(Xt, yt, params, rng, n_candidates))
    return RandomForestModel(params=params, trees=trees, n_features=X.shape[1])
