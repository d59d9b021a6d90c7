"""Round-trip-translation data augmentation behind a provider interface.

Each augmentation variant is one independent source->pivot->source trip.
Providers only need a ``translate(text, source_lang, target_lang)``
method and a ``provider_name``; a deterministic mock ships for tests
and offline runs, and an HTTP JSON provider talks to a real service.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, runtime_checkable

import requests

from .corpus import Augmented, Corpus, Document
from .errors import ConfigError, DataError, RemoteError

log = logging.getLogger(__name__)

TRANSLATE_ENDPOINT_ENV = "TRANSLATE_ENDPOINT"


@runtime_checkable
class TranslationProvider(Protocol):
    provider_name: str

    def translate(self, text: str, source_lang: str, target_lang: str) -> str: ...


class IdentityProvider:
    """Returns the input unchanged; the degenerate reference provider."""

    provider_name = "identity"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        return text


class MockTranslationProvider:
    """Deterministic stand-in for a translation service.

    The forward hop tags the text with a bracket marker; the backward
    hop removes the marker and rotates the token order by ``salt``
    positions. ``salt=0`` therefore round-trips to the identity, while
    different salts emulate the variation a real service produces.
    """

    def __init__(self, salt: int = 0):
        self.salt = salt
        self.provider_name = f"mock-{salt}"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        marker = f"[{self.salt}]"
        if not text.startswith(marker):
            return f"{marker} {text}"
        tokens = text[len(marker) :].split()
        if not tokens:
            return ""
        shift = self.salt % len(tokens)
        return " ".join(tokens[shift:] + tokens[:shift])


class HttpTranslationProvider:
    """Generic JSON-over-HTTP provider.

    POSTs ``{"text", "source", "target"}`` to ``{base_url}/translate``
    and expects ``{"text": ...}`` back.
    """

    def __init__(self, base_url: str | None = None, timeout: float = 30.0, retries: int = 2):
        base_url = base_url or os.environ.get(TRANSLATE_ENDPOINT_ENV)
        if not base_url:
            raise ConfigError(
                f"no translation endpoint: pass base_url or set {TRANSLATE_ENDPOINT_ENV}"
            )
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.provider_name = f"http:{self.base_url}"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        payload = {"text": text, "source": source_lang, "target": target_lang}
        last_error = None
        for _ in range(self.retries + 1):
            try:
                response = requests.post(
                    f"{self.base_url}/translate", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code != 200:
                raise RemoteError(
                    f"provider {self.provider_name} returned HTTP {response.status_code}",
                    retryable=response.status_code >= 500,
                )
            try:
                return str(response.json()["text"])
            except (ValueError, KeyError) as exc:
                raise RemoteError(
                    f"provider {self.provider_name} sent a malformed response: {exc}"
                ) from exc
        raise RemoteError(
            f"provider {self.provider_name} unreachable: {last_error}", retryable=True
        )


@dataclass(frozen=True)
class AugmentConfig:
    rounds: int = 3
    pivot_lang: str = "en"
    source_lang: str = "bn"
    dedupe: bool = True
    cache_path: str | None = None

    def __post_init__(self):
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")


class TranslationCache:
    """JSONL-backed translation memo, keyed on provider, langs and text hash.

    Unreadable or malformed lines are skipped with a warning; identical
    keys always map to identical values (providers are deterministic),
    so concurrent appends are harmless.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._entries: dict[str, str] = {}
        if self.path.exists():
            self._load()

    def _load(self):
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            log.warning("translation cache %s unreadable (%s); bypassing", self.path, exc)
            return
        for i, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                self._entries[record["key"]] = record["output_text"]
            except (ValueError, KeyError, TypeError):
                log.warning("translation cache %s line %d corrupt; skipping", self.path, i)

    @staticmethod
    def key(provider_name: str, source_lang: str, target_lang: str, text: str) -> str:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return f"{provider_name}:{source_lang}:{target_lang}:{digest}"

    def get(self, key: str) -> str | None:
        return self._entries.get(key)

    def put(self, key: str, source_lang: str, target_lang: str, text: str, output: str):
        if key in self._entries:
            return
        self._entries[key] = output
        record = {
            "key": key,
            "source_lang": source_lang,
            "target_lang": target_lang,
            "input_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "output_text": output,
        }
        with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def _cached_translate(
    text: str,
    provider: TranslationProvider,
    source_lang: str,
    target_lang: str,
    cache: TranslationCache | None,
) -> str:
    if cache is not None:
        key = TranslationCache.key(provider.provider_name, source_lang, target_lang, text)
        hit = cache.get(key)
        if hit is not None:
            return hit
    output = provider.translate(text, source_lang, target_lang)
    if cache is not None:
        cache.put(key, source_lang, target_lang, text, output)
    return output


def round_trip(
    text: str,
    provider: TranslationProvider,
    cfg: AugmentConfig,
    cache: TranslationCache | None = None,
) -> str:
    """Translate source -> pivot -> source, consulting the cache per hop."""
    if cache is None and cfg.cache_path:
        cache = TranslationCache(cfg.cache_path)
    pivot = _cached_translate(text, provider, cfg.source_lang, cfg.pivot_lang, cache)
    return _cached_translate(pivot, provider, cfg.pivot_lang, cfg.source_lang, cache)


def augment_corpus(
    corpus: Corpus, provider: TranslationProvider, cfg: AugmentConfig | None = None
) -> Corpus:
    """Append ``rounds`` round-trip variants per document.

    Requires a fully labeled corpus; variants inherit their origin's
    label and carry Augmented(round) provenance.  With ``dedupe`` on,
    variants textually identical to the original or to an earlier
    variant of the same document are dropped.  A provider failure skips
    that variant and continues.
    """
    cfg = cfg or AugmentConfig()
    if not corpus.is_fully_labeled():
        raise DataError("augmentation requires a fully labeled corpus")
    cache = TranslationCache(cfg.cache_path) if cfg.cache_path else None

    output: list[Document] = []
    for doc in corpus:
        output.append(doc)
        seen = {doc.content}
        for round_index in range(1, cfg.rounds + 1):
            try:
                variant_text = round_trip(doc.content, provider, cfg, cache)
            except RemoteError as exc:
                log.warning(
                    "provider %s failed on %s round %d: %s; skipping variant",
                    provider.provider_name, doc.id, round_index, exc,
                )
                continue
            if cfg.dedupe:
                if variant_text in seen:
                    continue
                seen.add(variant_text)
            output.append(
                replace(
                    doc,
                    id=f"{doc.id}__aug{round_index}",
                    content=variant_text,
                    text=None,
                    tokens=None,
                    provenance=Augmented(round=round_index),
                )
            )
    return Corpus(output)
