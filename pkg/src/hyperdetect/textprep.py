"""Bangla text preprocessing: cleaning, tokenization, stopwords, stemming.

The document chain is fixed: merge title+content, clean, tokenize,
remove stopwords, stem each token, truncate to the first ``max_tokens``
tokens.  Every stage is a pure function of (input, config).
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .corpus import Corpus, Document, merge_title_content
from .errors import ConfigError

HARD_TOKEN_LIMIT = 512

_BENGALI_BLOCK = range(0x0980, 0x0A00)
_LETTER_CATEGORIES = {"Lo", "Mn", "Mc"}

# Bengali-block code points that spell words: letters, vowel signs,
# virama, nukta and the nasalization marks. Digits, currency and other
# symbols in the block are excluded.
_BANGLA_WORD_CHARS = frozenset(
    chr(cp) for cp in _BENGALI_BLOCK if unicodedata.category(chr(cp)) in _LETTER_CATEGORIES
)

_DIGIT_CHARS = frozenset("0123456789" + "".join(chr(cp) for cp in range(0x09E6, 0x09F0)))


def _read_token_lines(path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip() and not line.lstrip().startswith("#")]


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword file: UTF-8, one token per line, # comments."""
    return frozenset(_read_token_lines(path))


def load_stem_rules(path) -> tuple[str, ...]:
    """Read a suffix file: UTF-8, one suffix per line, # comments."""
    return tuple(_read_token_lines(path))


def _asset(name: str):
    return resources.files("hyperdetect.assets").joinpath(name)


def default_stopwords() -> frozenset[str]:
    return load_stopwords(_asset("stopwords_bn.txt"))


def default_stem_rules() -> tuple[str, ...]:
    return load_stem_rules(_asset("stem_rules_bn.txt"))


@dataclass(frozen=True)
class PreprocessConfig:
    remove_digits: bool = True
    stopword_list: frozenset[str] = field(default_factory=default_stopwords)
    stem_rules: tuple[str, ...] = field(default_factory=default_stem_rules)
    max_tokens: int = 500
    hard_token_limit: int = HARD_TOKEN_LIMIT

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be >= 1")
        if self.max_tokens > self.hard_token_limit:
            raise ConfigError(
                f"max_tokens ({self.max_tokens}) exceeds the hard token limit ({self.hard_token_limit})"
            )
        # Longest-suffix-first so a single linear scan finds the longest match.
        ordered = tuple(sorted(self.stem_rules, key=lambda s: (-len(s), s)))
        object.__setattr__(self, "stem_rules", ordered)
        object.__setattr__(self, "stopword_list", frozenset(self.stopword_list))


def clean(text: str, cfg: PreprocessConfig | None = None) -> str:
    """Strip everything that is not Bangla word material.

    Keeps Bengali-block letters and combining signs plus whitespace;
    digits (ASCII and Bangla) survive only when ``remove_digits`` is
    off.  Removed characters are deleted outright, then whitespace runs
    collapse to single spaces.
    """
    cfg = cfg or PreprocessConfig()
    kept = []
    for ch in text:
        if ch in _BANGLA_WORD_CHARS or ch.isspace():
            kept.append(ch)
        elif not cfg.remove_digits and ch in _DIGIT_CHARS:
            kept.append(ch)
    return " ".join("".join(kept).split())


def tokenize(text: str) -> list[str]:
    """Split cleaned text on whitespace runs, preserving order."""
    return text.split()


def remove_stopwords(tokens: list[str], cfg: PreprocessConfig) -> list[str]:
    return [t for t in tokens if t not in cfg.stopword_list]


def stem(token: str, cfg: PreprocessConfig) -> str:
    """Strip at most one suffix, the longest rule that matches.

    The strip only happens when the remaining stem keeps at least two
    characters; otherwise the token is returned unchanged.
    """
    for suffix in cfg.stem_rules:
        if len(token) - len(suffix) >= 2 and token.endswith(suffix):
            return token[: -len(suffix)]
    return token


def preprocess_text(text: str, cfg: PreprocessConfig) -> tuple[str, ...]:
    tokens = tokenize(clean(text, cfg))
    tokens = remove_stopwords(tokens, cfg)
    tokens = [stem(t, cfg) for t in tokens]
    return tuple(tokens[: cfg.max_tokens])


def preprocess_document(doc: Document, cfg: PreprocessConfig | None = None) -> Document:
    """Run the full chain on one document and store the result in ``tokens``.

    A document whose token list comes out empty is returned with
    ``tokens == ()``; the caller decides whether to drop it.
    """
    cfg = cfg or PreprocessConfig()
    merged = merge_title_content(doc)
    return replace(merged, tokens=preprocess_text(merged.text, cfg))


def preprocess_corpus(corpus: Corpus, cfg: PreprocessConfig | None = None) -> tuple[Corpus, list[str]]:
    """Preprocess every document; returns (corpus, ids that came out empty)."""
    cfg = cfg or PreprocessConfig()
    processed = [preprocess_document(doc, cfg) for doc in corpus]
    empty_ids = [doc.id for doc in processed if not doc.tokens]
    return Corpus(processed), empty_ids
