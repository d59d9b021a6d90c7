"""Versioned model envelope: JSON with an integrity checksum.

Envelope fields: format_version, model_type, created_unix, vectorizer
(TF-IDF block or null), params (model-specific), sha256 (hex digest of
the canonicalized envelope minus the checksum itself).
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path

from ..errors import ModelFormatError
from ..features import TfidfModel
from .forest import RandomForestModel
from .logreg import LogisticRegressionModel
from .naive_bayes import NaiveBayesModel
from .svm import SvmModel

FORMAT_VERSION = 1

MODEL_CLASSES = {
    cls.model_type: cls
    for cls in (LogisticRegressionModel, NaiveBayesModel, SvmModel, RandomForestModel)
}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _checksum(envelope: dict) -> str:
    body = {k: v for k, v in envelope.items() if k != "sha256"}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def _default_created_unix() -> int:
    # SOURCE_DATE_EPOCH lets reproducible runs pin the timestamp.
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    return int(stamp) if stamp else int(time.time())


def save_model(model, path, vectorizer: TfidfModel | None = None,
               created_unix: int | None = None) -> None:
    if model.model_type not in MODEL_CLASSES:
        raise ModelFormatError(f"cannot serialize model type {model.model_type!r}")
    envelope = {
        "format_version": FORMAT_VERSION,
        "model_type": model.model_type,
        "created_unix": created_unix if created_unix is not None else _default_created_unix(),
        "vectorizer": vectorizer.to_dict() if vectorizer is not None else None,
        "params": model.to_params_dict(),
    }
    envelope["sha256"] = _checksum(envelope)
    Path(path).write_text(canonical_json(envelope) + "\n", encoding="utf-8")


def load_model(path):
    """Read an envelope; returns (model, vectorizer or None)."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        envelope = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(envelope, dict):
        raise ModelFormatError(f"model file {path} does not hold an envelope object")
    version = envelope.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {version!r}; this build reads version {FORMAT_VERSION}"
        )
    for key in ("model_type", "params", "sha256"):
        if key not in envelope:
            raise ModelFormatError(f"model envelope is missing {key!r}")
    if _checksum(envelope) != envelope["sha256"]:
        raise ModelFormatError(f"model file {path} failed its checksum; refusing partial load")
    model_type = envelope["model_type"]
    cls = MODEL_CLASSES.get(model_type)
    if cls is None:
        raise ModelFormatError(f"unknown model_type {model_type!r}")
    model = cls.from_params_dict(envelope["params"])
    vectorizer = TfidfModel.from_dict(envelope["vectorizer"]) if envelope.get("vectorizer") else None
    return model, vectorizer
