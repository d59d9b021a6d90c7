"""L2-regularized logistic regression on sparse features.

Minimizes (1/C) * 0.5 * ||w||^2 + sum_i log(1 + exp(-y_i (w.x_i + b)))
with y in {-1,+1} and an unpenalized intercept.  Two solvers share the
objective: a deterministic full-batch gradient descent with Armijo
backtracking, and a stochastic variance-reduced (SAGA-style) solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from ..errors import ConfigError, DataError, FitError
from ..features import SparseVector, to_csr

GRADIENT_TOL = 1e-6

SOLVER_FULL_BATCH = "full_batch"
SOLVER_SAGA = "saga"


@dataclass(frozen=True)
class LogisticRegressionParams:
    C: float = 10.0
    max_iter: int = 100
    penalty: str = "l2"
    solver: str = SOLVER_SAGA
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError("C must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.penalty != "l2":
            raise ConfigError(f"unsupported penalty {self.penalty!r}")
        if self.solver not in (SOLVER_FULL_BATCH, SOLVER_SAGA):
            raise ConfigError(f"unknown solver {self.solver!r}")


def _margins(X, w: np.ndarray, b: float, y: np.ndarray) -> np.ndarray:
    return y * (X @ w + b)


def objective(X, y: np.ndarray, w: np.ndarray, b: float, C: float) -> float:
    """Regularized negative log-likelihood; y must be in {-1,+1}."""
    m = _margins(X, w, b, y)
    return 0.5 / C * float(w @ w) + float(np.logaddexp(0.0, -m).sum())


def gradient(X, y: np.ndarray, w: np.ndarray, b: float, C: float) -> tuple[np.ndarray, float]:
    """Exact gradient of :func:`objective` in (w, b)."""
    m = _margins(X, w, b, y)
    coeff = -y * expit(-m)
    grad_w = w / C + X.T @ coeff
    grad_b = float(coeff.sum())
    return np.asarray(grad_w).ravel(), grad_b


def _grad_norm(grad_w: np.ndarray, grad_b: float) -> float:
    return float(np.sqrt(grad_w @ grad_w + grad_b * grad_b))


def _solve_full_batch(X, y, params):
    n_features = X.shape[1]
    w = np.zeros(n_features)
    b = 0.0
    step = 1.0
    converged = False
    obj = objective(X, y, w, b, params.C)
    history = [obj]
    for _ in range(params.max_iter):
        grad_w, grad_b = gradient(X, y, w, b, params.C)
        norm = _grad_norm(grad_w, grad_b)
        if norm < GRADIENT_TOL:
            converged = True
            break
        # Armijo backtracking keeps the objective strictly non-increasing.
        descent = norm * norm
        accepted = False
        while step > 1e-16:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            obj_new = objective(X, y, w_new, b_new, params.C)
            if obj_new <= obj - 1e-4 * step * descent:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, b, obj = w_new, b_new, obj_new
        history.append(obj)
        step = min(step * 2.0, 1e6)
    if not converged:
        grad_w, grad_b = gradient(X, y, w, b, params.C)
        converged = _grad_norm(grad_w, grad_b) < GRADIENT_TOL
    return w, b, converged, history


def _solve_saga(X, y, params):
    """SAGA on the averaged objective (1/n) sum l_i + (1/(2Cn)) ||w||^2.

    Keeps one scalar of gradient memory per sample (the loss derivative
    with respect to the margin), so the table stays O(n).
    """
    n_samples, n_features = X.shape
    lam = 1.0 / (params.C * n_samples)
    row_sq_norms = np.asarray(X.multiply(X).sum(axis=1)).ravel() if sparse.issparse(X) else (X * X).sum(axis=1)
    lipschitz = 0.25 * float(row_sq_norms.max() + 1.0)  # +1 for the intercept column
    eta = 1.0 / (lipschitz + lam)

    w = np.zeros(n_features)
    b = 0.0
    phi = -y * expit(np.zeros(n_samples))  # loss derivative at w=0, b=0
    avg_w = X.T @ (phi / n_samples)
    avg_w = np.asarray(avg_w).ravel()
    avg_b = float(phi.mean())

    csr = sparse.csr_matrix(X) if not sparse.issparse(X) else X.tocsr()
    indptr, indices, data = csr.indptr, csr.indices, csr.data
    rng = np.random.default_rng(params.seed)
    converged = False

    for _ in range(params.max_iter):
        picks = rng.integers(0, n_samples, size=n_samples)
        for i in picks:
            sl = slice(indptr[i], indptr[i + 1])
            cols = indices[sl]
            vals = data[sl]
            margin = y[i] * (vals @ w[cols] + b)
            phi_new = -y[i] * expit(-margin)
            delta = phi_new - phi[i]
            # step along delta*x_i + avg_grad + lam*w (intercept unregularized)
            w -= eta * (avg_w + lam * w)
            w[cols] -= eta * delta * vals
            b -= eta * (avg_b + delta)
            avg_w[cols] += delta * vals / n_samples
            avg_b += delta / n_samples
            phi[i] = phi_new
        grad_w, grad_b = gradient(csr, y, w, b, params.C)
        if _grad_norm(grad_w, grad_b) < GRADIENT_TOL:
            converged = True
            break
    return w, b, converged


@dataclass
class LogisticRegressionModel:
    model_type = "logistic_regression"

    params: LogisticRegressionParams
    weights: np.ndarray
    intercept: float
    converged: bool
    n_features: int
    training_doc_ids: tuple[str, ...] | None = field(default=None, repr=False)
    objective_history: list[float] | None = field(default=None, repr=False, compare=False)

    def decision_function(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        X = to_csr(vectors)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.asarray(X @ self.weights).ravel() + self.intercept

    def predict_proba(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        p1 = expit(self.decision_function(vectors))
        return np.column_stack([1.0 - p1, p1])

    def to_params_dict(self) -> dict:
        return {
            "C": self.params.C,
            "max_iter": self.params.max_iter,
            "penalty": self.params.penalty,
            "solver": self.params.solver,
            "seed": self.params.seed,
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "converged": self.converged,
            "n_features": self.n_features,
            "training_doc_ids": list(self.training_doc_ids) if self.training_doc_ids else None,
        }

    @classmethod
    def from_params_dict(cls, d: dict) -> "LogisticRegressionModel":
        params = LogisticRegressionParams(
            C=d["C"], max_iter=d["max_iter"], penalty=d["penalty"], solver=d["solver"],
            seed=d.get("seed", 0),
        )
        ids = d.get("training_doc_ids")
        return cls(
            params=params,
            weights=np.asarray(d["weights"], dtype=float),
            intercept=float(d["intercept"]),
            converged=bool(d["converged"]),
            n_features=int(d["n_features"]),
            training_doc_ids=tuple(ids) if ids else None,
        )


def _validate_binary(labels: np.ndarray):
    present = set(np.unique(labels).tolist())
    if not present <= {0, 1}:
        raise DataError(f"labels must be 0/1, got {sorted(present)}")
    if len(present) < 2:
        raise FitError("training set must contain both classes")


def fit_logistic_regression(
    vectors: Sequence[SparseVector],
    labels: Sequence[int],
    params: LogisticRegressionParams | None = None,
) -> LogisticRegressionModel:
    params = params or LogisticRegressionParams()
    X = to_csr(vectors)
    y01 = np.asarray([int(v) for v in labels])
    if len(y01) != X.shape[0]:
        raise DataError("vectors and labels disagree in length")
    _validate_binary(y01)
    y = 2.0 * y01 - 1.0

    history = None
    if params.solver == SOLVER_FULL_BATCH:
        w, b, converged, history = _solve_full_batch(X, y, params)
    else:
        w, b, converged = _solve_saga(X, y, params)
    return LogisticRegressionModel(
        params=params, weights=w, intercept=b, converged=converged, n_features=X.shape[1],
        objective_history=history,
    )
