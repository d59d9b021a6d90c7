"""Self-training: fit, pseudo-label the pool with confidence filtering, refit.

Round r fits on the labeled set plus everything accepted in earlier
rounds, then labels the remaining pool.  After the last round the model
is refitted once more so accepted pseudo-labels actually reach it; with
validation re-evaluation on, the best round by validation F1 is
returned instead of simply the last.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, Document, Label, PseudoLabeled
from .errors import ConfigError, DataError, FitError
from .evaluation import evaluate, predict_corpus_proba
from .features import TfidfConfig, TfidfModel, fit_vocabulary, transform_corpus
from .models import FAMILIES

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelfTrainConfig:
    confidence_threshold: float = 0.90
    rounds: int = 1
    max_added_per_round: int | None = None
    class_balance_cap: float | None = None
    reeval_on_val: bool = True

    def __post_init__(self):
        if not 0.5 < self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must be in (0.5, 1]")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.max_added_per_round is not None and self.max_added_per_round < 0:
            raise ConfigError("max_added_per_round must be >= 0")
        if self.class_balance_cap is not None and self.class_balance_cap < 1.0:
            raise ConfigError("class_balance_cap is a ratio and must be >= 1")


@dataclass
class PseudoLabelBatch:
    documents: tuple[Document, ...]
    round_index: int
    counts: dict[Label, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.documents)


def pseudo_label(
    model, unlabeled: Corpus, threshold: float, vectorizer: TfidfModel | None = None,
    round_index: int = 1,
) -> PseudoLabelBatch:
    """Assign argmax labels to documents whose confidence clears the threshold."""
    if len(unlabeled) == 0:
        return PseudoLabelBatch(documents=(), round_index=round_index,
                                counts={Label.NOT_HYPERPARTISAN: 0, Label.HYPERPARTISAN: 0})
    proba = predict_corpus_proba(model, unlabeled, vectorizer)
    confidences = proba.max(axis=1)
    assigned = proba.argmax(axis=1)
    accepted = []
    counts = {Label.NOT_HYPERPARTISAN: 0, Label.HYPERPARTISAN: 0}
    for doc, conf, cls in zip(unlabeled, confidences, assigned):
        if conf >= threshold:
            label = Label(int(cls))
            accepted.append(
                replace(doc, label=label, provenance=PseudoLabeled(confidence=float(conf)))
            )
            counts[label] += 1
    return PseudoLabelBatch(documents=tuple(accepted), round_index=round_index, counts=counts)


def _apply_caps(batch: PseudoLabelBatch, cfg: SelfTrainConfig) -> PseudoLabelBatch:
    """Trim a batch to max_added_per_round, then enforce the class ratio cap.

    Candidates are ranked by confidence (ties by document id).  With the
    ratio cap, the larger class keeps at most floor(cap * smaller).
    """
    docs = sorted(batch.documents, key=lambda d: (-d.provenance.confidence, d.id))
    if cfg.max_added_per_round is not None:
        docs = docs[: cfg.max_added_per_round]
    if cfg.class_balance_cap is not None:
        neg = [d for d in docs if d.label == Label.NOT_HYPERPARTISAN]
        pos = [d for d in docs if d.label == Label.HYPERPARTISAN]
        small, large = (neg, pos) if len(neg) <= len(pos) else (pos, neg)
        limit = int(cfg.class_balance_cap * len(small))
        if len(large) > limit:
            keep = {d.id for d in small} | {d.id for d in large[:limit]}
            docs = [d for d in docs if d.id in keep]
    counts = {
        Label.NOT_HYPERPARTISAN: sum(1 for d in docs if d.label == Label.NOT_HYPERPARTISAN),
        Label.HYPERPARTISAN: sum(1 for d in docs if d.label == Label.HYPERPARTISAN),
    }
    return PseudoLabelBatch(documents=tuple(docs), round_index=batch.round_index, counts=counts)


def _fit_round(family: str, params, corpus: Corpus, tfidf_config: TfidfConfig,
               record_ids: bool = True):
    vectorizer = fit_vocabulary(corpus, tfidf_config)
    vectors = transform_corpus(vectorizer, corpus)
    labels = [int(doc.label) for doc in corpus]
    _, fit_fn = FAMILIES[family]
    model = fit_fn(vectors, labels, params)
    if record_ids:
        model.training_doc_ids = tuple(corpus.ids())
    return model, vectorizer


def self_train(
    labeled: Corpus,
    unlabeled: Corpus,
    val: Corpus,
    family: str,
    params=None,
    cfg: SelfTrainConfig | None = None,
    tfidf_config: TfidfConfig | None = None,
) -> tuple[object, TfidfModel, list[dict]]:
    """Run the loop; returns (model, its vectorizer, per-round history).

    History records one dict per fitted model:
    {round, added_total, added_per_class, val_accuracy, val_f1,
    pool_remaining}.  The final entry is the post-loop refit.
    """
    cfg = cfg or SelfTrainConfig()
    tfidf_config = tfidf_config or TfidfConfig()
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}")
    if not labeled.is_fully_labeled():
        raise DataError("labeled corpus has unlabeled documents")
    if min(labeled.class_counts.values()) < 1:
        raise FitError("labeled corpus must contain both classes")
    if cfg.reeval_on_val and not val.is_fully_labeled():
        raise DataError("validation corpus must be fully labeled")

    initial_pool = len(unlabeled)
    if initial_pool == 0:
        model, vectorizer = _fit_round(family, params, labeled, tfidf_config)
        return model, vectorizer, []

    history: list[dict] = []
    fitted: list[tuple[object, TfidfModel]] = []
    accepted: list[Document] = []
    pool = list(unlabeled)

    def record(round_index: int, model, vectorizer, batch: PseudoLabelBatch | None):
        entry = {
            "round": round_index,
            "added_total": len(batch) if batch else 0,
            "added_per_class": {
                "NotHyperpartisan": batch.counts[Label.NOT_HYPERPARTISAN] if batch else 0,
                "Hyperpartisan": batch.counts[Label.HYPERPARTISAN] if batch else 0,
            },
            "pool_remaining": len(pool),
        }
        if cfg.reeval_on_val:
            report = evaluate(model, val, vectorizer, allow_training_eval=True)
            entry["val_accuracy"] = report.accuracy
            entry["val_f1"] = report.f1
        history.append(entry)
        fitted.append((model, vectorizer))

    for round_index in range(1, cfg.rounds + 1):
        train_corpus = Corpus(list(labeled) + accepted)
        model, vectorizer = _fit_round(family, params, train_corpus, tfidf_config)
        batch = pseudo_label(
            model, Corpus(pool), cfg.confidence_threshold, vectorizer, round_index
        )
        batch = _apply_caps(batch, cfg)
        added_ids = {doc.id for doc in batch.documents}
        pool = [doc for doc in pool if doc.id not in added_ids]
        accepted.extend(batch.documents)
        record(round_index, model, vectorizer, batch)
        if len(batch) == 0:
            log.info("round %d added nothing; stopping early", round_index)
            break

    final_corpus = Corpus(list(labeled) + accepted)
    final_model, final_vectorizer = _fit_round(family, params, final_corpus, tfidf_config)
    record(len(history) + 1, final_model, final_vectorizer, None)

    if cfg.reeval_on_val:
        best = max(range(len(history)), key=lambda i: (history[i]["val_f1"], i))
        model, vectorizer = fitted[best]
    else:
        model, vectorizer = fitted[-1]
    return model, vectorizer, history


def write_history(history: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entry in history:
            fh.write(json.dumps(entry, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
