"""Client for an external text classifier exposed over HTTP.

Stands in for any remotely hosted model (e.g. a fine-tuned
transformer): it never trains locally and only returns probability
rows.  Wire protocol: POST {endpoint}/predict with
{"texts": [...]} -> {"probabilities": [[p0, p1], ...]}.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

from ..errors import ConfigError, RemoteError

PREDICT_ENDPOINT_ENV = "PREDICT_ENDPOINT"

ROW_SUM_TOLERANCE = 1e-6


@dataclass
class RemoteClassifier:
    model_type = "remote"

    endpoint: str = ""
    timeout: float = 30.0
    batch_size: int = 100

    def __post_init__(self):
        if not self.endpoint:
            self.endpoint = os.environ.get(PREDICT_ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ConfigError(f"no prediction endpoint: pass endpoint or set {PREDICT_ENDPOINT_ENV}")
        self.endpoint = self.endpoint.rstrip("/")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        """Predict in input order, ceil(len/batch_size) requests."""
        texts = list(texts)
        if not texts:
            return np.zeros((0, 2))
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start : start + self.batch_size]
            rows.extend(self._predict_batch(batch))
        result = np.asarray(rows, dtype=float)
        # Validated to 1e-6 above; renormalize so downstream consumers
        # see exact probability rows.
        return result / result.sum(axis=1, keepdims=True)

    def _predict_batch(self, batch: list[str]) -> list[list[float]]:
        try:
            response = requests.post(
                f"{self.endpoint}/predict", json={"texts": batch}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise RemoteError(f"prediction endpoint unreachable: {exc}", retryable=True) from exc
        if response.status_code != 200:
            raise RemoteError(
                f"prediction endpoint returned HTTP {response.status_code}",
                retryable=response.status_code >= 500,
            )
        try:
            payload = response.json()
            rows = payload["probabilities"]
        except (ValueError, KeyError) as exc:
            raise RemoteError(
                f"malformed prediction response: {exc}; payload starts {response.text[:120]!r}"
            ) from exc
        if not isinstance(rows, list) or len(rows) != len(batch):
            raise RemoteError(
                f"prediction response has {len(rows) if isinstance(rows, list) else '??'} rows "
                f"for {len(batch)} texts"
            )
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != 2:
                raise RemoteError(f"row {i} is not a two-class probability row: {row!r}")
            if any(not isinstance(v, (int, float)) or math.isnan(v) or v < 0 or v > 1 for v in row):
                raise RemoteError(f"row {i} has entries outside [0, 1]: {row!r}")
            if abs(sum(row) - 1.0) > ROW_SUM_TOLERANCE:
                raise RemoteError(f"row {i} sums to {sum(row)!r}, expected 1 within {ROW_SUM_TOLERANCE}")
        return rows
