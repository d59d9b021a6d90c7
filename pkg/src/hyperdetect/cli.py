"""Batch command-line surface wiring the pipeline end to end.

Exit codes: 0 success, 2 config error, 3 data error, 4 remote-service
error, 5 internal error.  Every command writes exactly one run manifest
next to its outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import __version__
from .augment import (
    AugmentConfig,
    HttpTranslationProvider,
    MockTranslationProvider,
    augment_corpus,
)
from .corpus import Corpus, SplitConfig, load_dataset, save_dataset, split
from .errors import ConfigError, DataError, HyperdetectError, RemoteError
from .evaluation import evaluate, format_report_table
from .explain import ExplainConfig, explain, explanation_to_json, write_html_report
from .features import TfidfConfig, fit_vocabulary, transform_corpus
from .models import FAMILIES, load_model, make_params, save_model
from .selftrain import SelfTrainConfig, self_train, write_history
from .textprep import (
    PreprocessConfig,
    load_stem_rules,
    load_stopwords,
    preprocess_corpus,
    preprocess_document,
)
from .tuning import default_grid, grid_search, load_grid_spec


def _write_manifest(anchor: Path, command: str, config: dict, inputs: list, outputs: list,
                    seeds: dict, started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seeds": seeds,
        "toolkit_version": __version__,
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    path = anchor / "manifest.json" if anchor.is_dir() else Path(f"{anchor}.manifest.json")
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _prep_config(args) -> PreprocessConfig:
    kwargs = {}
    if getattr(args, "keep_digits", False):
        kwargs["remove_digits"] = False
    if getattr(args, "stopwords", None):
        kwargs["stopword_list"] = load_stopwords(args.stopwords)
    if getattr(args, "stem_rules", None):
        kwargs["stem_rules"] = load_stem_rules(args.stem_rules)
    if getattr(args, "max_tokens", None):
        kwargs["max_tokens"] = args.max_tokens
    return PreprocessConfig(**kwargs)


def _load_params(args):
    if args.params in (None, "default"):
        return make_params(args.model)
    overrides = json.loads(Path(args.params).read_text(encoding="utf-8"))
    if not isinstance(overrides, dict):
        raise ConfigError(f"params file {args.params} must hold a JSON object")
    return make_params(args.model, **overrides)


def _provider(args):
    if args.provider == "mock":
        return MockTranslationProvider(salt=getattr(args, "salt", 0))
    return HttpTranslationProvider(base_url=getattr(args, "endpoint", None))


def _fit_on_corpus(corpus: Corpus, family: str, params, tfidf_config: TfidfConfig):
    if not corpus.is_fully_labeled():
        raise DataError("training corpus must be fully labeled")
    for doc in corpus:
        if doc.tokens is None:
            raise DataError(f"document {doc.id} has no tokens; run prep first")
    vectorizer = fit_vocabulary(corpus, tfidf_config)
    vectors = transform_corpus(vectorizer, corpus)
    labels = [int(doc.label) for doc in corpus]
    model = FAMILIES[family][1](vectors, labels, params)
    model.training_doc_ids = tuple(corpus.ids())
    return model, vectorizer


def cmd_prep(args) -> int:
    started = time.monotonic()
    cfg = _prep_config(args)
    corpus, report = load_dataset(args.input)
    processed, empty_ids = preprocess_corpus(corpus, cfg)
    kept = Corpus(doc for doc in processed if doc.tokens)
    save_dataset(kept, args.output, fmt="jsonl")
    print(
        f"prep: read {report.rows_read} rows, loaded {report.loaded}, "
        f"dropped {report.dropped_empty} empty rows, {len(report.row_errors)} malformed, "
        f"dropped {len(empty_ids)} documents with no tokens left"
    )
    _write_manifest(
        Path(args.output), "prep",
        {"max_tokens": cfg.max_tokens, "remove_digits": cfg.remove_digits,
         "load": {"rows_read": report.rows_read, "dropped_empty": report.dropped_empty,
                  "row_errors": len(report.row_errors)},
         "dropped_empty_token_docs": len(empty_ids)},
        [args.input], [args.output], {}, started,
    )
    return 0


def cmd_augment(args) -> int:
    started = time.monotonic()
    corpus, _ = load_dataset(args.input)
    provider = _provider(args)
    cfg = AugmentConfig(rounds=args.rounds, dedupe=not args.no_dedupe, cache_path=args.cache)
    augmented = augment_corpus(corpus, provider, cfg)
    # Variants come back without tokens; re-run preprocessing on them when
    # the incoming corpus was already preprocessed.
    if any(doc.tokens is not None for doc in corpus):
        prep_cfg = _prep_config(args)
        augmented = Corpus(
            doc if doc.tokens is not None else preprocess_document(doc, prep_cfg)
            for doc in augmented
        )
    save_dataset(augmented, args.output, fmt="jsonl")
    print(f"augment: {len(corpus)} documents in, {len(augmented)} out (rounds={args.rounds})")
    _write_manifest(
        Path(args.output), "augment",
        {"rounds": args.rounds, "provider": provider.provider_name, "dedupe": not args.no_dedupe},
        [args.input], [args.output], {"salt": getattr(args, "salt", 0)}, started,
    )
    return 0


def cmd_split(args) -> int:
    started = time.monotonic()
    try:
        train_f, val_f, test_f = (float(x) for x in args.ratios.split(","))
    except ValueError as exc:
        raise ConfigError(f"--ratios must be three comma-separated numbers: {exc}") from exc
    corpus, _ = load_dataset(args.input)
    cfg = SplitConfig(train_fraction=train_f, val_fraction=val_f, test_fraction=test_f,
                      seed=args.seed, stratified=not args.no_stratify)
    train, val, test = split(corpus, cfg)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, part in (("train", train), ("val", val), ("test", test)):
        path = outdir / f"{name}.jsonl"
        save_dataset(part, path, fmt="jsonl")
        outputs.append(path)
    print(f"split: {len(train)}/{len(val)}/{len(test)} documents (seed={args.seed})")
    _write_manifest(
        outdir, "split",
        {"ratios": [train_f, val_f, test_f], "stratified": not args.no_stratify},
        [args.input], outputs, {"seed": args.seed}, started,
    )
    return 0


def cmd_tune(args) -> int:
    started = time.monotonic()
    corpus, _ = load_dataset(args.train)
    if args.grid and args.grid != "default":
        grid = load_grid_spec(args.grid)
    else:
        grid = default_grid(args.model, folds=args.folds, metric=args.metric, seed=args.seed)
    vectorizer = fit_vocabulary(corpus, TfidfConfig(min_df=args.min_df, max_features=args.max_features))
    vectors = transform_corpus(vectorizer, corpus)
    labels = [int(doc.label) for doc in corpus]
    result = grid_search(grid, vectors, labels)
    Path(args.out).write_text(
        json.dumps(result.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(result.format_table())
    print(f"best: {result.best_params} ({grid.metric}={result.best_score:.4f})")
    _write_manifest(
        Path(args.out), "tune",
        {"model": args.model, "grid": args.grid or "default", "folds": grid.folds,
         "metric": grid.metric},
        [args.train], [args.out], {"seed": grid.seed}, started,
    )
    return 0


def cmd_train(args) -> int:
    started = time.monotonic()
    corpus, _ = load_dataset(args.train)
    params = _load_params(args)
    tfidf_config = TfidfConfig(min_df=args.min_df, max_features=args.max_features)
    model, vectorizer = _fit_on_corpus(corpus, args.model, params, tfidf_config)
    save_model(model, args.out, vectorizer=vectorizer)
    print(f"train: fitted {args.model} on {len(corpus)} documents -> {args.out}")
    _write_manifest(
        Path(args.out), "train",
        {"model": args.model, "params": dataclasses.asdict(params),
         "tfidf": {"min_df": args.min_df, "max_features": args.max_features}},
        [args.train], [args.out], {}, started,
    )
    return 0


def cmd_selftrain(args) -> int:
    started = time.monotonic()
    labeled, _ = load_dataset(args.train)
    unlabeled, _ = load_dataset(args.unlabeled)
    val, _ = load_dataset(args.val)
    params = _load_params(args)
    cfg = SelfTrainConfig(confidence_threshold=args.threshold, rounds=args.rounds)
    model, vectorizer, history = self_train(
        labeled, unlabeled, val, args.model, params, cfg,
        TfidfConfig(min_df=args.min_df, max_features=args.max_features),
    )
    save_model(model, args.out, vectorizer=vectorizer)
    history_path = args.history or f"{args.out}.history.jsonl"
    write_history(history, history_path)
    added = sum(entry["added_total"] for entry in history)
    print(f"selftrain: {len(history)} fits, {added} pseudo-labels accepted -> {args.out}")
    _write_manifest(
        Path(args.out), "selftrain",
        {"model": args.model, "threshold": args.threshold, "rounds": args.rounds},
        [args.train, args.unlabeled, args.val], [args.out, history_path], {}, started,
    )
    return 0


def cmd_eval(args) -> int:
    started = time.monotonic()
    model, vectorizer = load_model(args.model)
    test, _ = load_dataset(args.test)
    report = evaluate(
        model, test, vectorizer,
        model_name=model.model_type, dataset_name=Path(args.test).name,
        allow_training_eval=args.allow_train_eval,
    )
    Path(args.out).write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(format_report_table([report]))
    if report.flags:
        print("flags: " + ", ".join(report.flags))
    _write_manifest(
        Path(args.out), "eval",
        {"model_file": args.model, "allow_train_eval": args.allow_train_eval},
        [args.model, args.test], [args.out], {}, started,
    )
    return 0


def cmd_explain(args) -> int:
    started = time.monotonic()
    model, vectorizer = load_model(args.model)
    corpus, _ = load_dataset(args.docs)
    docs = [doc for doc in corpus if doc.tokens][: args.limit]
    if not docs:
        raise DataError("no preprocessed documents to explain; run prep first")
    cfg = ExplainConfig(num_samples=args.samples, top_k=args.top_k, seed=args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    explanations = [explain(model, doc, vectorizer, cfg) for doc in docs]
    json_path = outdir / "explanations.jsonl"
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        for exp in explanations:
            fh.write(explanation_to_json(exp) + "\n")
    write_html_report(explanations, docs, outdir)
    print(f"explain: wrote {len(explanations)} explanations to {outdir}")
    _write_manifest(
        outdir, "explain",
        {"samples": args.samples, "top_k": args.top_k, "limit": args.limit},
        [args.model, args.docs], [json_path, outdir / "index.html"], {"seed": args.seed}, started,
    )
    return 0


def cmd_pipeline(args) -> int:
    """Reference preset: prep, 3x augmentation without dedupe, 70/15/15
    split, train with default (best-known) params, one self-training
    round at threshold 0.9, evaluation, and a sample of explanations."""
    started = time.monotonic()
    if args.preset != "reference":
        raise ConfigError(f"unknown preset {args.preset!r}")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    prep_cfg = PreprocessConfig()
    provider = _provider(args)

    corpus, load_report = load_dataset(args.input)
    processed, _ = preprocess_corpus(corpus, prep_cfg)
    processed = Corpus(doc for doc in processed if doc.tokens)
    prep_path = outdir / "01_prep.jsonl"
    save_dataset(processed, prep_path, fmt="jsonl")

    augmented = augment_corpus(processed, provider, AugmentConfig(rounds=3, dedupe=False))
    augmented = Corpus(
        doc if doc.tokens is not None else preprocess_document(doc, prep_cfg) for doc in augmented
    )
    aug_path = outdir / "02_augmented.jsonl"
    save_dataset(augmented, aug_path, fmt="jsonl")

    train, val, test = split(augmented, SplitConfig(seed=args.seed))
    for name, part in (("train", train), ("val", val), ("test", test)):
        save_dataset(part, outdir / f"03_{name}.jsonl", fmt="jsonl")

    params = make_params(args.model)
    model, vectorizer = _fit_on_corpus(train, args.model, params, TfidfConfig())
    model_path = outdir / "04_model.json"
    save_model(model, model_path, vectorizer=vectorizer)

    if args.unlabeled:
        pool, _ = load_dataset(args.unlabeled)
        pool_prepped, _ = preprocess_corpus(pool, prep_cfg)
        pool_prepped = Corpus(doc for doc in pool_prepped if doc.tokens)
        model, vectorizer, history = self_train(
            train, pool_prepped, val, args.model, params, SelfTrainConfig()
        )
        save_model(model, outdir / "05_selftrain_model.json", vectorizer=vectorizer)
        write_history(history, outdir / "05_history.jsonl")

    report = evaluate(model, test, vectorizer, model_name=args.model, dataset_name="test")
    (outdir / "06_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(format_report_table([report]))

    sample = [doc for doc in test if doc.tokens][:3]
    explanations = [
        explain(model, doc, vectorizer, ExplainConfig(seed=args.seed)) for doc in sample
    ]
    write_html_report(explanations, sample, outdir / "07_explanations")
    with open(outdir / "07_explanations" / "explanations.jsonl", "w", encoding="utf-8",
              newline="\n") as fh:
        for exp in explanations:
            fh.write(explanation_to_json(exp) + "\n")

    _write_manifest(
        outdir, "pipeline",
        {"preset": args.preset, "model": args.model, "provider": provider.provider_name,
         "rows_read": load_report.rows_read, "unlabeled": args.unlabeled},
        [args.input], sorted(str(p) for p in outdir.iterdir()), {"seed": args.seed}, started,
    )
    return 0


def _add_prep_flags(parser):
    parser.add_argument("--max-tokens", type=int, default=None, help="truncation bound (default 500)")
    parser.add_argument("--keep-digits", action="store_true", help="keep ASCII and Bangla digits")
    parser.add_argument("--stopwords", default=None, help="stopword file overriding the bundled list")
    parser.add_argument("--stem-rules", default=None, help="suffix file overriding the bundled rules")


def _add_tfidf_flags(parser):
    parser.add_argument("--min-df", type=int, default=1)
    parser.add_argument("--max-features", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperdetect", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hyperdetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="load, preprocess, and save a corpus")
    p.add_argument("input")
    p.add_argument("output")
    _add_prep_flags(p)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("augment", help="add round-trip-translation variants")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--provider", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint", default=None, help="translation service base URL")
    p.add_argument("--salt", type=int, default=0, help="mock provider variation salt")
    p.add_argument("--no-dedupe", action="store_true")
    p.add_argument("--cache", default=None, help="JSONL translation cache path")
    _add_prep_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("split", help="deterministic train/val/test split")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--ratios", default="0.70,0.15,0.15")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-stratify", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("tune", help="grid search with cross-validation")
    p.add_argument("train")
    p.add_argument("--model", choices=sorted(FAMILIES), required=True)
    p.add_argument("--grid", default="default", help="grid spec JSON file or 'default'")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--metric", choices=["accuracy", "f1"], default="f1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_tfidf_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="fit a classifier and save it")
    p.add_argument("train")
    p.add_argument("--model", choices=sorted(FAMILIES), required=True)
    p.add_argument("--params", default="default",
                   help="JSON file of parameter overrides, or 'default' for best-known values")
    p.add_argument("--out", required=True)
    _add_tfidf_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("selftrain", help="train with pseudo-labeling rounds")
    p.add_argument("train")
    p.add_argument("unlabeled")
    p.add_argument("val")
    p.add_argument("--model", choices=sorted(FAMILIES), required=True)
    p.add_argument("--params", default="default")
    p.add_argument("--threshold", type=float, default=0.90)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None)
    _add_tfidf_flags(p)
    p.set_defaults(func=cmd_selftrain)

    p = sub.add_parser("eval", help="evaluate a saved model on a test corpus")
    p.add_argument("model")
    p.add_argument("test")
    p.add_argument("--out", required=True)
    p.add_argument("--allow-train-eval", action="store_true",
                   help="permit overlap with training ids; report is watermarked")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("explain", help="write LIME-style explanations")
    p.add_argument("model")
    p.add_argument("docs")
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=10, help="explain at most this many documents")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("pipeline", help="run the whole reference pipeline")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--preset", default="reference")
    p.add_argument("--model", choices=sorted(FAMILIES), default="lr")
    p.add_argument("--provider", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--salt", type=int, default=0)
    p.add_argument("--unlabeled", default=None, help="optional unlabeled pool for self-training")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"E_CONFIG: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"E_DATA: {exc}", file=sys.stderr)
        return 3
    except RemoteError as exc:
        print(f"E_REMOTE: {exc}", file=sys.stderr)
        return 4
    except HyperdetectError as exc:
        print(f"E_INTERNAL: {exc}", file=sys.stderr)
        return 5
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"E_INTERNAL: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
