"""Document data model, dataset ingestion, and deterministic splitting."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, SchemaError


class Label(enum.IntEnum):
    """Binary class labels; index order is fixed across the whole toolkit."""

    NOT_HYPERPARTISAN = 0
    HYPERPARTISAN = 1


LABEL_NAMES = {Label.NOT_HYPERPARTISAN: "NotHyperpartisan", Label.HYPERPARTISAN: "Hyperpartisan"}

_TRUE_STRINGS = {"1", "true", "hyperpartisan"}
_FALSE_STRINGS = {"0", "false", "nothyperpartisan", "not_hyperpartisan"}


def parse_label(value) -> Label | None:
    """Normalize a raw label cell to a Label, or None when blank.

    Accepts "1"/"0", "true"/"false" and the class names, case-insensitively.
    """
    if value is None:
        return None
    if isinstance(value, Label):
        return value
    if isinstance(value, bool):
        return Label.HYPERPARTISAN if value else Label.NOT_HYPERPARTISAN
    if isinstance(value, (int, float)):
        value = str(int(value))
    text = str(value).strip().lower()
    if not text:
        return None
    if text in _TRUE_STRINGS:
        return Label.HYPERPARTISAN
    if text in _FALSE_STRINGS:
        return Label.NOT_HYPERPARTISAN
    raise DataError(f"unrecognized label value {value!r}")


@dataclass(frozen=True)
class Original:
    kind = "original"


@dataclass(frozen=True)
class Augmented:
    round: int
    kind = "augmented"


@dataclass(frozen=True)
class PseudoLabeled:
    confidence: float
    kind = "pseudo_labeled"


Provenance = Original | Augmented | PseudoLabeled


def provenance_to_dict(p: Provenance) -> dict:
    if isinstance(p, Augmented):
        return {"kind": p.kind, "round": p.round}
    if isinstance(p, PseudoLabeled):
        return {"kind": p.kind, "confidence": p.confidence}
    return {"kind": "original"}


def provenance_from_dict(d: dict) -> Provenance:
    kind = d.get("kind", "original")
    if kind == "augmented":
        return Augmented(round=int(d["round"]))
    if kind == "pseudo_labeled":
        return PseudoLabeled(confidence=float(d["confidence"]))
    if kind == "original":
        return Original()
    raise DataError(f"unknown provenance kind {kind!r}")


@dataclass(frozen=True)
class Document:
    """One news article.

    ``text`` is the merged title+content string and ``tokens`` the
    preprocessed token sequence; both start out None and are filled by
    the preprocessing stages.
    """

    id: str
    title: str
    content: str
    source: str = ""
    label: Label | None = None
    text: str | None = None
    tokens: tuple[str, ...] | None = None
    provenance: Provenance = field(default_factory=Original)


class Corpus:
    """An immutable, ordered collection of documents with unique ids."""

    def __init__(self, documents):
        docs = tuple(documents)
        seen = set()
        for doc in docs:
            if doc.id in seen:
                raise DataError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
        self._documents = docs

    @property
    def documents(self) -> tuple[Document, ...]:
        return self._documents

    @property
    def class_counts(self) -> dict[Label, int]:
        counts = {Label.NOT_HYPERPARTISAN: 0, Label.HYPERPARTISAN: 0}
        for doc in self._documents:
            if doc.label is not None:
                counts[doc.label] += 1
        return counts

    @property
    def labels(self) -> list[Label | None]:
        return [doc.label for doc in self._documents]

    def is_fully_labeled(self) -> bool:
        return all(doc.label is not None for doc in self._documents)

    def is_fully_unlabeled(self) -> bool:
        return all(doc.label is None for doc in self._documents)

    def ids(self) -> list[str]:
        return [doc.id for doc in self._documents]

    def __len__(self) -> int:
        return len(self._documents)

    def __iter__(self):
        return iter(self._documents)

    def __getitem__(self, i) -> Document:
        return self._documents[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self._documents == other._documents

    def map(self, fn) -> "Corpus":
        return Corpus(fn(doc) for doc in self._documents)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.70
    val_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(f <= 0 for f in fracs):
            raise ConfigError("split fractions must all be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(fracs)!r}")


@dataclass
class LoadReport:
    path: str
    format: str
    rows_read: int = 0
    loaded: int = 0
    dropped_empty: int = 0
    row_errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def drop_count(self) -> int:
        return self.dropped_empty


def _is_blank(value) -> bool:
    return value is None or not str(value).strip()


def _infer_format(path: Path, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    raise ConfigError(f"cannot infer dataset format from {path.name!r}; pass format explicitly")


def load_dataset(path, fmt: str = "auto") -> tuple[Corpus, LoadReport]:
    """Load a corpus from CSV or JSONL.

    Rows with an empty Title or Content are dropped and counted in the
    report.  Malformed rows are recorded with their line number and
    skipped; loading continues.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    fmt = _infer_format(path, fmt)
    report = LoadReport(path=str(path), format=fmt)
    documents: list[Document] = []

    if fmt == "csv":
        rows = _read_csv_rows(path)
    elif fmt == "jsonl":
        rows = _read_jsonl_rows(path)
    else:
        raise ConfigError(f"unknown dataset format {fmt!r}")

    for line_no, row, err in rows:
        report.rows_read += 1
        if err is not None:
            report.row_errors.append((line_no, err))
            continue
        if _is_blank(row.get("title")) or _is_blank(row.get("content")):
            report.dropped_empty += 1
            continue
        try:
            label = parse_label(row.get("label"))
        except DataError as exc:
            report.row_errors.append((line_no, str(exc)))
            continue
        doc_id = row.get("id") or f"d{line_no:06d}"
        documents.append(
            Document(
                id=str(doc_id),
                title=str(row["title"]),
                content=str(row["content"]),
                source=str(row.get("source") or ""),
                label=label,
                text=row.get("text"),
                tokens=tuple(row["tokens"]) if row.get("tokens") else None,
                provenance=provenance_from_dict(row["provenance"]) if row.get("provenance") else Original(),
            )
        )
        report.loaded += 1

    corpus = Corpus(documents)
    return corpus, report


def _read_csv_rows(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in ("Title", "Content"):
            if required not in header:
                raise SchemaError(f"CSV file {path.name} is missing required column {required!r}")
        for i, raw in enumerate(reader, start=1):
            if raw.get(None):
                yield i, {}, f"row has {len(header) + len(raw[None])} fields, expected {len(header)}"
                continue
            yield i, {
                "title": raw.get("Title"),
                "content": raw.get("Content"),
                "source": raw.get("Source"),
                "label": raw.get("Label"),
            }, None


def _read_jsonl_rows(path: Path):
    with open(path, encoding="utf-8") as fh:
        data_line = 0
        for line in fh:
            if not line.strip():
                continue
            data_line += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield data_line, {}, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(obj, dict):
                yield data_line, {}, "JSONL record is not an object"
                continue
            if "title" not in obj or "content" not in obj:
                yield data_line, {}, "record missing required key 'title' or 'content'"
                continue
            yield data_line, obj, None


def save_dataset(corpus: Corpus, path, fmt: str = "auto") -> None:
    """Write a corpus; mirrors :func:`load_dataset` for both formats.

    JSONL output is UTF-8 without BOM, compact separators, one object
    per line with \\n endings, so identical corpora serialize to
    identical bytes.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["Title", "Content", "Source", "Label"])
            for doc in corpus:
                writer.writerow(
                    [doc.title, doc.content, doc.source, LABEL_NAMES[doc.label] if doc.label is not None else ""]
                )
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for doc in corpus:
                fh.write(document_to_json(doc))
                fh.write("\n")
    else:
        raise ConfigError(f"unknown dataset format {fmt!r}")


def document_to_json(doc: Document) -> str:
    record: dict = {"id": doc.id, "title": doc.title, "content": doc.content, "source": doc.source}
    if doc.label is not None:
        record["label"] = LABEL_NAMES[doc.label]
    if not isinstance(doc.provenance, Original):
        record["provenance"] = provenance_to_dict(doc.provenance)
    if doc.text is not None:
        record["text"] = doc.text
    if doc.tokens is not None:
        record["tokens"] = list(doc.tokens)
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def merge_title_content(doc: Document) -> Document:
    """Set doc.text to title + single space + content; other fields untouched."""
    return replace(doc, text=f"{doc.title} {doc.content}")


def _floor_share(fraction: float, n: int) -> int:
    # Plain floor(fraction*n) is fragile when fraction*n lands a hair
    # below an integer (0.15*3220 style); nudge by a fixed epsilon.
    return int(math.floor(fraction * n + 1e-9))


def _apportion(total: int, weights: list[int]) -> list[int]:
    """Largest-remainder apportionment of ``total`` across strata.

    Each stratum receives its quota rounded down, then leftover units go
    to the largest fractional remainders (earlier stratum wins ties).
    Every share differs from the exact quota by less than 1.
    """
    n = sum(weights)
    if n == 0:
        return [0] * len(weights)
    quotas = [total * w / n for w in weights]
    shares = [int(math.floor(q + 1e-9)) for q in quotas]
    leftovers = total - sum(shares)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in order[:leftovers]:
        shares[i] += 1
    return shares


def split(corpus: Corpus, cfg: SplitConfig) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic train/val/test split.

    Test and val sizes are floor(fraction * n); train takes the
    remainder so rounding never shrinks it.  In stratified mode the
    class ratio in every part matches the corpus within one document
    per class, and every class must land at least one document in each
    part.  Unlabeled documents form their own stratum.
    """
    n = len(corpus)
    if n == 0:
        raise DataError("cannot split an empty corpus")
    test_n = _floor_share(cfg.test_fraction, n)
    val_n = _floor_share(cfg.val_fraction, n)

    if cfg.stratified:
        strata: dict = {}
        for i, doc in enumerate(corpus):
            strata.setdefault(doc.label, []).append(i)
        keys = sorted(strata.keys(), key=lambda k: (k is not None, k))
    else:
        strata = {None: list(range(n))}
        keys = [None]

    rng = np.random.default_rng(cfg.seed)
    stratum_sizes = [len(strata[k]) for k in keys]
    test_shares = _apportion(test_n, stratum_sizes)
    remaining = [s - t for s, t in zip(stratum_sizes, test_shares)]
    val_shares = _apportion(val_n, remaining)

    if cfg.stratified and len(keys) > 1:
        for k, size, t, v in zip(keys, stratum_sizes, test_shares, val_shares):
            if min(t, v, size - t - v) < 1:
                raise DataError(
                    f"class {k!r} has too few documents ({size}) to appear in every split part"
                )

    test_idx: list[int] = []
    val_idx: list[int] = []
    train_idx: list[int] = []
    for k, t, v in zip(keys, test_shares, val_shares):
        members = strata[k]
        perm = rng.permutation(len(members))
        shuffled = [members[j] for j in perm]
        test_idx.extend(shuffled[:t])
        val_idx.extend(shuffled[t : t + v])
        train_idx.extend(shuffled[t + v :])

    def take(indices):
        return Corpus(corpus[i] for i in sorted(indices))

    return take(train_idx), take(val_idx), take(test_idx)
