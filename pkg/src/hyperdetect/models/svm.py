"""Soft-margin SVM with a polynomial kernel, trained by SMO.

The dual max sum(a) - 0.5 * sum_ij a_i a_j y_i y_j K_ij subject to
0 <= a_i <= C and sum a_i y_i = 0 is solved by pairwise coordinate
ascent with an error cache (Platt's working-set heuristics, made fully
deterministic).  Class probabilities come from a sigmoid fitted on
out-of-fold decision values.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DataError, FitError
from ..features import SparseVector, to_csr
from ..folds import stratified_fold_assignment

log = logging.getLogger(__name__)

_ALPHA_EPS = 1e-12


@dataclass(frozen=True)
class SvmParams:
    C: float = 10.0
    kernel: str = "poly"
    degree: int = 3
    coef0: float = 0.1
    gamma: float | str = "scale"
    tolerance: float = 1e-3
    max_passes: int = 2000
    platt_folds: int = 3

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError("C must be positive")
        if self.kernel != "poly":
            raise ConfigError(f"unsupported kernel {self.kernel!r}")
        if self.degree < 1:
            raise ConfigError("degree must be >= 1")
        if isinstance(self.gamma, str) and self.gamma != "scale":
            raise ConfigError(f"gamma must be a positive number or 'scale', got {self.gamma!r}")
        if not isinstance(self.gamma, str) and self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.tolerance <= 0 or self.max_passes < 1:
            raise ConfigError("tolerance must be > 0 and max_passes >= 1")


def poly_kernel(x: SparseVector, z: SparseVector, gamma: float, coef0: float, degree: int) -> float:
    """(gamma * <x,z> + coef0) ** degree for two equal-dimension vectors."""
    if x.dimension != z.dimension:
        raise DataError("kernel inputs must share a dimension")
    return (gamma * x.dot(z) + coef0) ** degree


def _kernel_matrix(A: np.ndarray, B: np.ndarray, gamma: float, coef0: float, degree: int) -> np.ndarray:
    return (gamma * (A @ B.T) + coef0) ** degree


def resolve_gamma(gamma, X: np.ndarray) -> float:
    """'scale' resolves to 1 / (n_features * variance of all matrix entries)."""
    if not isinstance(gamma, str):
        return float(gamma)
    variance = float(X.var())
    if variance <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * variance)


class _SmoSolver:
    """Deterministic SMO on a precomputed kernel matrix."""

    def __init__(self, K: np.ndarray, y: np.ndarray, C: float, tol: float, track_objective: bool = False):
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        self.n = len(y)
        self.alphas = np.zeros(self.n)
        self.b = 0.0
        self.errors = -y.astype(float)  # f(x) - y with f == 0 initially
        self.track_objective = track_objective
        self.objective_history: list[float] = []

    def dual_objective(self) -> float:
        ay = self.alphas * self.y
        return float(self.alphas.sum() - 0.5 * ay @ self.K @ ay)

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1_old, a2_old = self.alphas[i1], self.alphas[i2]
        y1, y2 = self.y[i1], self.y[i2]
        E1, E2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        if s > 0:
            low = max(0.0, a1_old + a2_old - self.C)
            high = min(self.C, a1_old + a2_old)
        else:
            low = max(0.0, a2_old - a1_old)
            high = min(self.C, self.C + a2_old - a1_old)
        if high - low < _ALPHA_EPS:
            return False

        k11 = self.K[i1, i1]
        k12 = self.K[i1, i2]
        k22 = self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2 = a2_old + y2 * (E1 - E2) / eta
            a2 = min(max(a2, low), high)
        else:
            # Flat or convex direction: the restricted dual peaks at a
            # clip end, so evaluate the exact objective change at both.
            def gain(a2_new: float) -> float:
                a1_new = a1_old + s * (a2_old - a2_new)
                d1 = y1 * (a1_new - a1_old)
                d2 = y2 * (a2_new - a2_old)
                return (
                    (a1_new - a1_old) + (a2_new - a2_old)
                    - d1 * (E1 + y1 - self.b) - d2 * (E2 + y2 - self.b)
                    - 0.5 * (d1 * d1 * k11 + d2 * d2 * k22) - d1 * d2 * k12
                )

            gain_low, gain_high = gain(low), gain(high)
            if max(gain_low, gain_high) <= _ALPHA_EPS:
                return False
            a2 = low if gain_low >= gain_high else high
        if abs(a2 - a2_old) < _ALPHA_EPS * (a2 + a2_old + _ALPHA_EPS):
            return False
        a1 = a1_old + s * (a2_old - a2)

        d1 = y1 * (a1 - a1_old)
        d2 = y2 * (a2 - a2_old)
        b1 = self.b - E1 - d1 * k11 - d2 * k12
        b2 = self.b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < self.C:
            b_new = b1
        elif 0.0 < a2 < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.errors += d1 * self.K[i1] + d2 * self.K[i2] + (b_new - self.b)
        self.alphas[i1] = a1
        self.alphas[i2] = a2
        self.b = b_new
        if self.track_objective:
            self.objective_history.append(self.dual_objective())
        return True

    def _examine(self, i2: int) -> int:
        y2 = self.y[i2]
        a2 = self.alphas[i2]
        E2 = self.errors[i2]
        r2 = E2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0)):
            return 0
        non_bound = np.flatnonzero((self.alphas > 0) & (self.alphas < self.C))
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(self.errors[non_bound] - E2))])
            if self._take_step(i1, i2):
                return 1
        # Deterministic fallback sweeps, starting just past i2.
        for offset in range(len(non_bound)):
            i1 = int(non_bound[(offset + i2 + 1) % len(non_bound)])
            if self._take_step(i1, i2):
                return 1
        for offset in range(self.n):
            i1 = (offset + i2 + 1) % self.n
            if self._take_step(i1, i2):
                return 1
        return 0

    def solve(self, max_passes: int) -> bool:
        num_changed = 0
        examine_all = True
        sweeps = 0
        while num_changed > 0 or examine_all:
            if sweeps >= max_passes:
                return False
            sweeps += 1
            num_changed = 0
            if examine_all:
                for i in range(self.n):
                    num_changed += self._examine(i)
            else:
                for i in np.flatnonzero((self.alphas > 0) & (self.alphas < self.C)):
                    num_changed += self._examine(int(i))
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True
        return True


def kkt_max_violation(alphas: np.ndarray, y: np.ndarray, decisions: np.ndarray, C: float) -> float:
    """Largest violation of the margin KKT conditions at the given solution."""
    margins = y * decisions
    boundary = 1e-8 * C
    at_zero = alphas <= boundary
    at_c = alphas >= C - boundary
    interior = ~at_zero & ~at_c
    violation = np.zeros_like(alphas)
    violation[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    violation[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    violation[interior] = np.abs(1.0 - margins[interior])
    return float(violation.max()) if len(violation) else 0.0


def _fit_platt_sigmoid(decisions: np.ndarray, y01: np.ndarray, max_iter: int = 200) -> tuple[float, float]:
    """Regularized sigmoid fit p = 1/(1+exp(A*f+B)) by damped Newton.

    Targets are smoothed to (N+ + 1)/(N+ + 2) and 1/(N- + 2), after
    Platt; the implementation follows the numerically careful version
    of Lin, Weng and Keerthi.
    """
    prior1 = float(np.sum(y01 == 1))
    prior0 = float(np.sum(y01 == 0))
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y01 == 1, hi, lo)

    A, B = 0.0, np.log((prior0 + 1.0) / (prior1 + 1.0))
    sigma = 1e-12

    def value(a, b):
        fApB = decisions * a + b
        pos = fApB >= 0
        out = np.empty_like(fApB)
        out[pos] = t[pos] * fApB[pos] + np.log1p(np.exp(-fApB[pos]))
        out[~pos] = (t[~pos] - 1.0) * fApB[~pos] + np.log1p(np.exp(fApB[~pos]))
        return float(out.sum())

    fval = value(A, B)
    for _ in range(max_iter):
        fApB = decisions * A + B
        pos = fApB >= 0
        p = np.empty_like(fApB)
        q = np.empty_like(fApB)
        p[pos] = np.exp(-fApB[pos]) / (1.0 + np.exp(-fApB[pos]))
        q[pos] = 1.0 / (1.0 + np.exp(-fApB[pos]))
        p[~pos] = 1.0 / (1.0 + np.exp(fApB[~pos]))
        q[~pos] = np.exp(fApB[~pos]) / (1.0 + np.exp(fApB[~pos]))
        d2 = p * q
        h11 = float(np.sum(decisions * decisions * d2)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.sum(decisions * d2))
        d1 = t - p
        g1 = float(np.sum(decisions * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            new_A, new_B = A + step * dA, B + step * dB
            new_f = value(new_A, new_B)
            if new_f < fval + 1e-4 * step * gd:
                A, B, fval = new_A, new_B, new_f
                break
            step *= 0.5
        else:
            break
    return A, B


@dataclass
class SvmModel:
    model_type = "svm"

    params: SvmParams
    support_vectors: np.ndarray   # dense (n_sv, n_features)
    dual_coefs: np.ndarray        # alpha_i * y_i per support vector
    bias: float
    gamma_value: float
    platt_a: float
    platt_b: float
    converged: bool
    n_features: int
    training_doc_ids: tuple[str, ...] | None = field(default=None, repr=False)

    def decision_function(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        X = to_csr(vectors)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        K = _kernel_matrix(
            X.toarray(), self.support_vectors, self.gamma_value, self.params.coef0, self.params.degree
        )
        return K @ self.dual_coefs + self.bias

    def predict_proba(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        f = self.decision_function(vectors)
        fApB = f * self.platt_a + self.platt_b
        p1 = np.empty_like(fApB)
        pos = fApB >= 0
        p1[pos] = np.exp(-fApB[pos]) / (1.0 + np.exp(-fApB[pos]))
        p1[~pos] = 1.0 / (1.0 + np.exp(fApB[~pos]))
        return np.column_stack([1.0 - p1, p1])

    def to_params_dict(self) -> dict:
        return {
            "C": self.params.C,
            "kernel": self.params.kernel,
            "degree": self.params.degree,
            "coef0": self.params.coef0,
            "gamma": self.params.gamma,
            "tolerance": self.params.tolerance,
            "max_passes": self.params.max_passes,
            "platt_folds": self.params.platt_folds,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefs": self.dual_coefs.tolist(),
            "bias": self.bias,
            "gamma_value": self.gamma_value,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "converged": self.converged,
            "n_features": self.n_features,
            "training_doc_ids": list(self.training_doc_ids) if self.training_doc_ids else None,
        }

    @classmethod
    def from_params_dict(cls, d: dict) -> "SvmModel":
        params = SvmParams(
            C=d["C"], kernel=d["kernel"], degree=d["degree"], coef0=d["coef0"], gamma=d["gamma"],
            tolerance=d["tolerance"], max_passes=d["max_passes"], platt_folds=d.get("platt_folds", 3),
        )
        ids = d.get("training_doc_ids")
        support = np.asarray(d["support_vectors"], dtype=float).reshape(-1, int(d["n_features"]))
        return cls(
            params=params,
            support_vectors=support,
            dual_coefs=np.asarray(d["dual_coefs"], dtype=float),
            bias=float(d["bias"]),
            gamma_value=float(d["gamma_value"]),
            platt_a=float(d["platt_a"]),
            platt_b=float(d["platt_b"]),
            converged=bool(d["converged"]),
            n_features=int(d["n_features"]),
            training_doc_ids=tuple(ids) if ids else None,
        )


def _solve_alphas(X: np.ndarray, y: np.ndarray, params: SvmParams, gamma: float,
                  track_objective: bool = False) -> _SmoSolver:
    K = _kernel_matrix(X, X, gamma, params.coef0, params.degree)
    solver = _SmoSolver(K, y, params.C, params.tolerance, track_objective=track_objective)
    solver.converged = solver.solve(params.max_passes)
    return solver


def fit_svm(
    vectors: Sequence[SparseVector],
    labels: Sequence[int],
    params: SvmParams | None = None,
    track_objective: bool = False,
) -> SvmModel:
    params = params or SvmParams()
    X = to_csr(vectors).toarray()
    y01 = np.asarray([int(v) for v in labels])
    if len(y01) != X.shape[0]:
        raise DataError("vectors and labels disagree in length")
    present = set(np.unique(y01).tolist())
    if not present <= {0, 1}:
        raise DataError(f"labels must be 0/1, got {sorted(present)}")
    if len(present) < 2:
        raise FitError("training set must contain both classes")
    y = 2.0 * y01 - 1.0
    gamma = resolve_gamma(params.gamma, X)

    solver = _solve_alphas(X, y, params, gamma, track_objective=track_objective)
    if not solver.converged:
        warnings.warn("SMO hit max_passes before satisfying KKT conditions", stacklevel=2)

    # Out-of-fold decision values give the sigmoid honest inputs; tiny
    # classes fall back to in-sample values.
    folds = params.platt_folds
    counts = np.bincount(y01, minlength=2)
    if counts.min() >= folds and len(y01) >= 2 * folds:
        assignment = stratified_fold_assignment(y01.tolist(), folds, seed=0)
        oof = np.zeros(len(y01))
        for fold in range(folds):
            held = assignment == fold
            sub = _solve_alphas(X[~held], y[~held], params, gamma)
            sv = sub.alphas > _ALPHA_EPS
            K_held = _kernel_matrix(X[held], X[~held][sv], gamma, params.coef0, params.degree)
            oof[held] = K_held @ (sub.alphas[sv] * y[~held][sv]) + sub.b
        platt_inputs = oof
    else:
        platt_inputs = (solver.K @ (solver.alphas * y)) + solver.b
        log.debug("class too small for %d-fold Platt calibration; using in-sample decisions", folds)
    platt_a, platt_b = _fit_platt_sigmoid(platt_inputs, y01)

    sv_mask = solver.alphas > _ALPHA_EPS
    return SvmModel(
        params=params,
        support_vectors=X[sv_mask],
        dual_coefs=solver.alphas[sv_mask] * y[sv_mask],
        bias=solver.b,
        gamma_value=gamma,
        platt_a=platt_a,
        platt_b=platt_b,
        converged=solver.converged,
        n_features=X.shape[1],
    )
