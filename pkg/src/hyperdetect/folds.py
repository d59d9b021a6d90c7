"""Stratified k-fold assignment shared by tuning and Platt calibration."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def stratified_fold_assignment(labels, folds: int, seed: int) -> np.ndarray:
    """Assign each index a fold id in 0..folds-1.

    Members of each class are shuffled and dealt round-robin, with the
    dealing pointer carried across classes so fold sizes stay within one
    of each other both per class and in total.  Deterministic for a
    fixed seed.
    """
    labels = list(labels)
    n = len(labels)
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    if folds > n:
        raise ConfigError(f"cannot make {folds} folds from {n} samples")

    by_class: dict = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    class_keys = sorted(by_class.keys(), key=lambda k: (k is not None, k))

    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    pointer = 0
    for key in class_keys:
        members = by_class[key]
        perm = rng.permutation(len(members))
        for j in perm:
            assignment[members[j]] = pointer % folds
            pointer += 1
    return assignment
