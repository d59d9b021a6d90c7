"""Confusion-matrix evaluation: accuracy, precision, recall, F1.

Hyperpartisan is the positive class.  Zero-denominator metrics come
back as 0.0 with an explanatory flag instead of raising, so batch
evaluation of degenerate models always completes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, Label, PseudoLabeled
from .errors import DataError, LeakageError
from .features import TfidfModel, transform_corpus


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass
class EvaluationReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    model: str = ""
    dataset: str = ""
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dataset": self.dataset,
            "confusion": self.confusion.to_dict(),
            "metrics": {
                "accuracy": self.accuracy,
                "precision": self.precision,
                "recall": self.recall,
                "f1": self.f1,
            },
            "flags": list(self.flags),
        }


def confusion(labels: Sequence, predictions: Sequence) -> ConfusionMatrix:
    """Count a 2x2 confusion matrix with Hyperpartisan as positive."""
    if len(labels) != len(predictions):
        raise DataError(f"{len(labels)} labels vs {len(predictions)} predictions")
    if len(labels) == 0:
        raise DataError("cannot build a confusion matrix from zero pairs")
    tp = fp = tn = fn = 0
    for truth, pred in zip(labels, predictions):
        truth = int(truth)
        pred = int(pred)
        if truth == 1 and pred == 1:
            tp += 1
        elif truth == 1:
            fn += 1
        elif pred == 1:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(cm: ConfusionMatrix, model: str = "", dataset: str = "") -> EvaluationReport:
    flags: list[str] = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            flags.append(f"{name}_denominator_zero")
            return 0.0
        return num / den

    accuracy = ratio(cm.tp + cm.tn, cm.total, "accuracy")
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        flags.append("f1_denominator_zero")
        f1 = 0.0
    return EvaluationReport(
        confusion=cm, accuracy=accuracy, precision=precision, recall=recall, f1=f1,
        model=model, dataset=dataset, flags=flags,
    )


def reported_metric_discrepancies(
    cm: ConfusionMatrix, reported: Mapping[str, float], atol: float = 5e-5
) -> list[str]:
    """Compare externally claimed metrics against the count arithmetic.

    Returns one flag per metric whose derived value disagrees with the
    claim beyond ``atol`` (claims are usually rounded to four digits).
    """
    derived = metrics(cm)
    flags = []
    for name in ("accuracy", "precision", "recall", "f1"):
        if name not in reported:
            continue
        value = getattr(derived, name)
        if abs(value - reported[name]) > atol:
            flags.append(f"reported_{name}_mismatch:derived={value:.6f},reported={reported[name]:.6f}")
    return flags


def predict_corpus_proba(model, corpus: Corpus, vectorizer: TfidfModel | None) -> np.ndarray:
    """Probability rows for every document; local models need a vectorizer."""
    if getattr(model, "model_type", "") == "remote":
        texts = [doc.text if doc.text is not None else f"{doc.title} {doc.content}" for doc in corpus]
        return model.predict_proba(texts)
    if vectorizer is None:
        raise DataError("local models need the fitted vectorizer to evaluate documents")
    return model.predict_proba(transform_corpus(vectorizer, corpus))


def evaluate(
    model,
    test: Corpus,
    vectorizer: TfidfModel | None = None,
    model_name: str = "",
    dataset_name: str = "",
    allow_training_eval: bool = False,
) -> EvaluationReport:
    """Argmax predictions -> confusion -> metrics for a labeled test corpus.

    Refuses pseudo-labeled test documents outright, and refuses test
    sets overlapping the model's recorded training ids unless
    ``allow_training_eval`` is set, in which case the report is
    watermarked.
    """
    if len(test) == 0:
        raise DataError("test corpus is empty")
    if not test.is_fully_labeled():
        raise DataError("test corpus must be fully labeled")
    pseudo = [doc.id for doc in test if isinstance(doc.provenance, PseudoLabeled)]
    if pseudo:
        raise DataError(
            f"test corpus contains {len(pseudo)} pseudo-labeled documents (e.g. {pseudo[0]}); "
            "pseudo-labels are not ground truth"
        )
    flags: list[str] = []
    train_ids = getattr(model, "training_doc_ids", None)
    if train_ids:
        overlap = set(train_ids) & set(test.ids())
        if overlap:
            if not allow_training_eval:
                raise LeakageError(
                    f"{len(overlap)} test documents were in the training set (e.g. "
                    f"{sorted(overlap)[0]}); pass allow_training_eval to override"
                )
            flags.append("evaluated_on_training_data")

    proba = predict_corpus_proba(model, test, vectorizer)
    predictions = np.argmax(proba, axis=1)
    labels = [int(doc.label) for doc in test]
    report = metrics(confusion(labels, predictions), model=model_name, dataset=dataset_name)
    report.flags.extend(flags)
    return report


def format_report_table(reports: Sequence[EvaluationReport]) -> str:
    """Aligned text table: Model, Accuracy, Precision, Recall, F1-Score."""
    header = ("Model", "Accuracy", "Precision", "Recall", "F1-Score")
    rows = [
        (r.model or "?", f"{r.accuracy:.4f}", f"{r.precision:.4f}", f"{r.recall:.4f}", f"{r.f1:.4f}")
        for r in reports
    ]
    widths = [max(len(header[i]), *(len(row[i]) for row in rows)) for i in range(5)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)
