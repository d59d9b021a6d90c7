"""Local, model-agnostic explanations via a weighted ridge surrogate.

One unique token = one interpretable feature: a perturbation mask turns
all occurrences of a token on or off, the black box scores each
perturbed token sequence, and a locally weighted linear model over the
mask bits yields signed per-token weights.  Positive weight pushes the
prediction toward the explained class.
"""

from __future__ import annotations

import html
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .corpus import Document, Label
from .errors import ConfigError, DataError, SingularSurrogateError
from .features import TfidfModel, transform_tokens

EXHAUSTIVE_MASK_LIMIT = 4096  # enumerate all 2^n masks up to this many

PredictFn = Callable[[Sequence[tuple[str, ...]]], np.ndarray]


@dataclass(frozen=True)
class ExplainConfig:
    num_samples: int = 1000
    kernel_width: float = 25.0
    top_k: int = 10
    ridge_lambda: float = 1.0
    seed: int = 0
    target_class: int | None = None  # None = argmax of the original prediction
    exhaustive_when_feasible: bool = True

    def __post_init__(self):
        if self.num_samples < 1:
            raise ConfigError("num_samples must be >= 1")
        if self.kernel_width <= 0:
            raise ConfigError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ConfigError("ridge_lambda must be >= 0")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.target_class is not None and self.target_class not in (0, 1):
            raise ConfigError("target_class must be 0, 1, or None for auto")


@dataclass
class Explanation:
    doc_id: str
    explained_class: Label
    original_probability: float
    token_weights: list[tuple[str, float]]
    intercept: float
    surrogate_r2: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "explained_class": self.explained_class.name,
            "original_probability": self.original_probability,
            "intercept": self.intercept,
            "r2": self.surrogate_r2,
            "weights": [{"token": t, "weight": w} for t, w in self.token_weights],
        }


def perturbation_masks(unique_token_count: int, cfg: ExplainConfig) -> np.ndarray:
    """Binary masks, the all-ones mask always first.

    Exhaustive mode (2^n within the limit) yields every mask exactly
    once; otherwise num_samples masks are drawn by picking a
    deactivation count uniformly in 1..n and then a uniform subset.
    """
    n = unique_token_count
    if n < 1:
        raise DataError("need at least one unique token to perturb")
    if cfg.exhaustive_when_feasible and 2**n <= EXHAUSTIVE_MASK_LIMIT:
        values = [2**n - 1] + [v for v in range(2**n - 1)]
        masks = np.zeros((len(values), n), dtype=np.int8)
        for row, value in enumerate(values):
            for bit in range(n):
                masks[row, bit] = (value >> bit) & 1
        return masks
    rng = np.random.default_rng(cfg.seed)
    masks = np.ones((cfg.num_samples, n), dtype=np.int8)
    for row in range(1, cfg.num_samples):
        k = int(rng.integers(1, n + 1))
        off = rng.choice(n, size=k, replace=False)
        masks[row, off] = 0
    return masks


def mask_distances(masks: np.ndarray) -> np.ndarray:
    """Cosine distance of each mask from the all-ones mask.

    For a binary mask with k active bits out of n this is 1 - sqrt(k/n);
    the empty mask is defined to sit at distance 1.
    """
    n = masks.shape[1]
    active = masks.sum(axis=1)
    return 1.0 - np.sqrt(active / n)


def kernel_weight(distance, width: float):
    """Exponential kernel exp(-d^2 / width^2)."""
    if width <= 0:
        raise ConfigError("kernel width must be positive")
    return np.exp(-np.square(distance) / width**2)


def fit_local_surrogate(
    masks: np.ndarray, responses: np.ndarray, weights: np.ndarray, ridge_lambda: float
) -> tuple[np.ndarray, float, float]:
    """Weighted ridge by normal equations; the intercept is unpenalized.

    Minimizes sum_i w_i (y_i - b0 - beta.m_i)^2 + lambda * ||beta||^2.
    Returns (coefficients, intercept, weighted R^2).
    """
    masks = np.asarray(masks, dtype=float)
    responses = np.asarray(responses, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(masks) < 2:
        raise DataError("surrogate fit needs at least two masks")
    Z = np.column_stack([np.ones(len(masks)), masks])
    WZ = Z * weights[:, None]
    A = Z.T @ WZ
    A[1:, 1:] += ridge_lambda * np.eye(masks.shape[1])
    rhs = WZ.T @ responses
    try:
        chol = linalg.cho_factor(A)
        beta = linalg.cho_solve(chol, rhs)
    except linalg.LinAlgError as exc:
        raise SingularSurrogateError(
            "surrogate normal equations are singular; set ridge_lambda > 0 "
            "or provide more distinct masks"
        ) from exc

    intercept = float(beta[0])
    coef = beta[1:]
    fitted = Z @ beta
    ss_res = float(weights @ (responses - fitted) ** 2)
    total_weight = float(weights.sum())
    if total_weight <= 0:
        raise DataError("surrogate weights sum to zero")
    weighted_mean = float(weights @ responses) / total_weight
    ss_tot = float(weights @ (responses - weighted_mean) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef, intercept, r2


def unique_tokens(tokens: Sequence[str]) -> list[str]:
    seen = {}
    for token in tokens:
        seen.setdefault(token, None)
    return list(seen)


def explain_document(predict_fn: PredictFn, doc: Document, cfg: ExplainConfig | None = None) -> Explanation:
    """Explain one preprocessed document against a token-level black box.

    ``predict_fn`` maps a list of token tuples to probability rows; it
    is called once with every perturbed sequence so it can batch.
    """
    cfg = cfg or ExplainConfig()
    if not doc.tokens:
        raise DataError(f"document {doc.id} has no tokens to explain")
    vocab = unique_tokens(doc.tokens)
    masks = perturbation_masks(len(vocab), cfg)

    position = {token: i for i, token in enumerate(vocab)}
    sequences = []
    for mask in masks:
        sequences.append(tuple(t for t in doc.tokens if mask[position[t]]))
    proba = np.asarray(predict_fn(sequences), dtype=float)
    if proba.shape != (len(masks), 2):
        raise DataError(f"black box returned shape {proba.shape}, expected {(len(masks), 2)}")

    original = proba[0]
    target = int(np.argmax(original)) if cfg.target_class is None else cfg.target_class
    responses = proba[:, target]
    weights = kernel_weight(mask_distances(masks), cfg.kernel_width)
    coef, intercept, r2 = fit_local_surrogate(masks, responses, weights, cfg.ridge_lambda)

    ranked = sorted(zip(vocab, coef), key=lambda tw: (-abs(tw[1]), position[tw[0]]))
    top = [(token, float(weight)) for token, weight in ranked[: cfg.top_k]]
    return Explanation(
        doc_id=doc.id,
        explained_class=Label(target),
        original_probability=float(original[target]),
        token_weights=top,
        intercept=intercept,
        surrogate_r2=r2,
        sample_count=len(masks),
    )


def tfidf_predict_fn(model, vectorizer: TfidfModel) -> PredictFn:
    """Adapter: re-vectorize each perturbed token sequence for a local model."""

    def predict(sequences: Sequence[tuple[str, ...]]) -> np.ndarray:
        vectors = [transform_tokens(vectorizer, seq) for seq in sequences]
        return model.predict_proba(vectors)

    return predict


def remote_predict_fn(client) -> PredictFn:
    """Adapter: send each perturbed sequence as a space-joined text string."""

    def predict(sequences: Sequence[tuple[str, ...]]) -> np.ndarray:
        return client.predict_proba([" ".join(seq) for seq in sequences])

    return predict


def explain(model, doc: Document, vectorizer: TfidfModel | None = None,
            cfg: ExplainConfig | None = None) -> Explanation:
    """Convenience wrapper choosing the right adapter for the model kind."""
    if getattr(model, "model_type", "") == "remote":
        return explain_document(remote_predict_fn(model), doc, cfg)
    if vectorizer is None:
        raise DataError("local models need their fitted vectorizer for explanations")
    return explain_document(tfidf_predict_fn(model, vectorizer), doc, cfg)


def explanation_to_json(explanation: Explanation) -> str:
    return json.dumps(explanation.to_dict(), ensure_ascii=False, separators=(",", ":"))


_PAGE = """<!doctype html>
<html lang="bn"><head><meta charset="utf-8">
<title>Explanation {doc_id}</title>
<style>
body {{ font-family: sans-serif; max-width: 48rem; margin: 2rem auto; }}
.tok {{ padding: 0 .15rem; border-radius: .2rem; }}
table {{ border-collapse: collapse; margin-top: 1rem; }}
td, th {{ border: 1px solid #ccc; padding: .25rem .6rem; text-align: left; }}
</style></head><body>
<h1>{doc_id}</h1>
<p>Predicted class <strong>{cls}</strong> with probability {prob:.4f};
surrogate R&sup2; {r2:.4f} over {samples} samples.</p>
<p>{body}</p>
<table><tr><th>Token</th><th>Weight</th></tr>{rows}</table>
</body></html>
"""


def _token_span(token: str, weight: float, max_weight: float) -> str:
    if max_weight <= 0 or weight == 0.0:
        return html.escape(token)
    opacity = min(1.0, abs(weight) / max_weight)
    color = "0,160,0" if weight > 0 else "200,0,0"
    return (
        f'<span class="tok" style="background: rgba({color},{opacity:.3f})" '
        f'title="{weight:+.5f}">{html.escape(token)}</span>'
    )


def write_html_report(explanations: Sequence[Explanation], documents: Sequence[Document], out_dir) -> None:
    """One highlighted page per document plus an index."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs_by_id = {doc.id: doc for doc in documents}
    index_rows = []
    for exp in explanations:
        doc = docs_by_id[exp.doc_id]
        weight_map = dict(exp.token_weights)
        max_weight = max((abs(w) for w in weight_map.values()), default=0.0)
        body = " ".join(
            _token_span(tok, weight_map.get(tok, 0.0), max_weight) for tok in (doc.tokens or ())
        )
        rows = "".join(
            f"<tr><td>{html.escape(t)}</td><td>{w:+.6f}</td></tr>" for t, w in exp.token_weights
        )
        page = _PAGE.format(
            doc_id=html.escape(exp.doc_id),
            cls=exp.explained_class.name,
            prob=exp.original_probability,
            r2=exp.surrogate_r2,
            samples=exp.sample_count,
            body=body,
            rows=rows,
        )
        (out_dir / f"{exp.doc_id}.html").write_text(page, encoding="utf-8")
        index_rows.append(
            f'<li><a href="{html.escape(exp.doc_id)}.html">{html.escape(exp.doc_id)}</a> '
            f"&mdash; {exp.explained_class.name} ({exp.original_probability:.3f})</li>"
        )
    index = (
        "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>Explanations</title></head>"
        f"<body><h1>Explanations</h1><ul>{''.join(index_rows)}</ul></body></html>\n"
    )
    (out_dir / "index.html").write_text(index, encoding="utf-8")
