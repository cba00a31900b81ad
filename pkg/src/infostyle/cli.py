"""Command-line entry point: extract, analyze, train, ablate, index, search, serve.

Exit codes: 0 success, 1 usage error, 2 data error.  All randomness flows
from one --seed through named sub-seeds so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import service
from .errors import InfostyleError, InvalidParam, MissingFeature
from .features import FeatureVector, compute_feature, read_features_jsonl, write_features_jsonl
from .imaging import load_corpus_paths, load_image, normalize_window
from .metric import (
    MetricModel,
    TripletBatch,
    baseline_weights,
    evaluate,
    objective,
    select_lambda,
    train,
)
from .reduction import FeatureConfig, fit_pca, parse_config
from .retrieval import build_index, embed_image, load_index, query, save_index
from .triplets import agreement_table, label_all, oracle_consistency, read_triplets_csv

logger = logging.getLogger("infostyle")

DEFAULT_SEED = 42
DEFAULT_K = 5
DEFAULT_CV_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
ANALYSIS_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def sub_seed(seed: int, name: str) -> int:
    """Stable per-purpose seed derived from the master seed."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master random seed")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--quiet", action="store_true", help="suppress progress logging")

    parser = _Parser(prog="infostyle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="compute features for a corpus")
    p.add_argument("corpus_dir")
    p.add_argument("--features", default="color_hist,hog16", help="comma-separated feature names")
    p.add_argument("--out", required=True, help="output features JSONL path")
    p.add_argument("--skip-bad", action="store_true", help="skip unreadable images instead of failing")

    p = sub.add_parser("analyze", parents=[common], help="agreement tables for a triplet CSV")
    p.add_argument("triplets_csv")
    p.add_argument("--csv", action="store_true", help="emit CSV rows instead of aligned text")

    p = sub.add_parser("train", parents=[common], help="learn metric weights from triplets")
    p.add_argument("--features", required=True, help="features JSONL path")
    p.add_argument("--triplets", required=True, help="triplet responses CSV path")
    p.add_argument("--config", default="color_hist+hog16", help="feature config string")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="L1 penalty weight; omit to pick by cross-validation")
    p.add_argument("--cv-grid", default=",".join(str(x) for x in DEFAULT_CV_GRID))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--n-train", type=int, default=600)

    p = sub.add_parser("ablate", parents=[common], help="compare feature configs on one split")
    p.add_argument("--features", required=True)
    p.add_argument("--triplets", required=True)
    p.add_argument("--config", action="append", required=True, dest="configs",
                   help="feature config string; repeat for several rows")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--n-train", type=int, default=600)

    p = sub.add_parser("index", parents=[common], help="embed a corpus under a model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output index JSONL path")

    p = sub.add_parser("search", parents=[common], help="k nearest images to a query")
    p.add_argument("query", help="corpus id present in the index, or an image file path")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("-k", type=int, default=DEFAULT_K)
    p.add_argument("--include-self", action="store_true",
                   help="keep the query image itself in id-based results")

    p = sub.add_parser("serve", parents=[common], help="HTTP search service")
    p.add_argument("--addr", default="127.0.0.1:8080")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", default=None, help="corpus directory for /image and /thumb")
    p.add_argument("--ui-dir", default=None, help="static files served at /")
    p.add_argument("--cors-origin", default=None)
    p.add_argument("--embed-workers", type=int, default=None,
                   help="max concurrent upload embeddings (default: cpu count)")
    return parser


# --------------------------------------------------------------------------
# extract

def _extract_one(image_id: str, path: str, feature_names: list[str]):
    window = normalize_window(load_image(path))
    return [(image_id, compute_feature(name, window)) for name in feature_names]


def cmd_extract(args) -> int:
    feature_names = [f.strip() for f in args.features.split(",") if f.strip()]
    if not feature_names:
        raise InvalidParam("no features requested")
    paths = load_corpus_paths(args.corpus_dir)
    if not paths:
        raise InvalidParam(f"no images found in {args.corpus_dir!r}")
    threads = int(os.environ.get("INFOSTYLE_THREADS", 0)) or min(8, os.cpu_count() or 1)
    records: list[tuple[str, FeatureVector]] = []
    failures: list[tuple[str, str]] = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {
            pool.submit(_extract_one, image_id, path, feature_names): (image_id, path)
            for image_id, path in sorted(paths.items())
        }
        for future, (image_id, path) in futures.items():
            try:
                records.extend(future.result())
                logger.info("extracted %s", image_id)
            except (InfostyleError, OSError) as exc:
                failures.append((path, str(exc)))
                logger.warning("failed %s: %s", path, exc)
    records.sort(key=lambda r: (r[0], r[1].feature_name))
    write_features_jsonl(args.out, records)
    logger.info("wrote %d records to %s", len(records), args.out)
    if failures:
        for path, message in failures:
            print(f"error: {path}: {message}", file=sys.stderr)
        if not args.skip_bad:
            return EXIT_DATA
    return EXIT_OK


# --------------------------------------------------------------------------
# analyze

def _format_table(title: str, headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [title]
    lines.append("  ".join(h.rjust(w) for h, w in zip(headers, widths)))
    for row in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _accuracy_cell(accuracy) -> str:
    return "-" if accuracy is None else f"{accuracy:.2f}"


def cmd_analyze(args) -> int:
    ts = read_triplets_csv(args.triplets_csv)
    if not ts:
        raise InvalidParam(f"{args.triplets_csv!r} contains no triplets")
    thresholds = list(ANALYSIS_THRESHOLDS)
    cumulative = agreement_table(ts, thresholds, "cumulative")
    banded = agreement_table(ts, thresholds, "banded")
    oracle = 100.0 * oracle_consistency(ts)
    _, ties = label_all(ts)

    def band_label(row):
        if row.upper is None:
            return f"{row.threshold * 100:.0f}"
        return f"{row.threshold * 100:.0f}-{row.upper * 100:.0f}"

    if args.json:
        payload = {
            "cumulative": [
                {"threshold": r.threshold, "responses": r.responses,
                 "triplets": r.triplets, "accuracy": r.accuracy}
                for r in cumulative
            ],
            "banded": [
                {"threshold": r.threshold, "upper": r.upper, "responses": r.responses,
                 "triplets": r.triplets, "accuracy": r.accuracy}
                for r in banded
            ],
            "oracle_consistency": oracle,
            "ties": len(ties),
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    if args.csv:
        print("table,threshold,responses,triplets,accuracy")
        for r in cumulative:
            print(f"cumulative,{r.threshold * 100:.0f},{r.responses},{r.triplets},{_accuracy_cell(r.accuracy)}")
        for r in banded:
            print(f"banded,{band_label(r)},{r.responses},{r.triplets},{_accuracy_cell(r.accuracy)}")
        print(f"oracle,,,,{oracle:.2f}")
        return EXIT_OK

    headers = ["Threshold(%)"] + [f"{t * 100:.0f}" for t in thresholds]
    print(_format_table(
        "Cumulative agreement",
        headers,
        [
            ["Responses"] + [str(r.responses) for r in cumulative],
            ["Triplets"] + [str(r.triplets) for r in cumulative],
            ["Accuracy(%)"] + [_accuracy_cell(r.accuracy) for r in cumulative],
        ],
    ))
    print()
    print(_format_table(
        "Banded agreement",
        ["Threshold(%)"] + [band_label(r) for r in banded],
        [
            ["Responses"] + [str(r.responses) for r in banded],
            ["Triplets"] + [str(r.triplets) for r in banded],
            ["Accuracy(%)"] + [_accuracy_cell(r.accuracy) for r in banded],
        ],
    ))
    print()
    print(f"Oracle consistency: {oracle:.2f}%")
    print(f"Tied triplets (excluded from training): {len(ties)}")
    return EXIT_OK


# --------------------------------------------------------------------------
# train / ablate

def _triplet_image_ids(labeled) -> list[str]:
    ids = set()
    for t in labeled:
        ids.update((t.ref_id, t.winner_id, t.loser_id))
    return sorted(ids)


def _fit_config_pca(config: FeatureConfig, features_table, train_ids):
    pca = {}
    for entry in config.entries:
        if entry.target_dim is None:
            continue
        samples = []
        for image_id in train_ids:
            per_feature = features_table.get(image_id, {})
            if entry.name not in per_feature:
                raise MissingFeature(entry.name, image_id=image_id)
            samples.append(per_feature[entry.name])
        pca[entry.name] = fit_pca(samples, entry.target_dim)
    return pca


def _embed_ids(config, features_table, pca, ids):
    from .reduction import assemble

    vectors = {}
    for image_id in ids:
        per_feature = features_table.get(image_id, {})
        for entry in config.entries:
            if entry.name not in per_feature:
                raise MissingFeature(entry.name, image_id=image_id)
        vectors[image_id] = assemble(config, per_feature, pca).values
    return vectors


def _embed_triplets(labeled, vectors):
    from .metric import EmbeddedTriplet

    return [
        EmbeddedTriplet(vectors[t.ref_id], vectors[t.winner_id], vectors[t.loser_id])
        for t in labeled
    ]


def _train_on_split(features_table, train_labeled, test_labeled, config, lam,
                    cv_grid, folds, seed):
    """Fit PCA on the training side, embed, pick lambda if needed, train.

    Returns (model, stats dict)."""
    train_ids = _triplet_image_ids(train_labeled)
    pca = _fit_config_pca(config, features_table, train_ids)
    vectors = _embed_ids(
        config, features_table, pca,
        sorted(set(train_ids) | set(_triplet_image_ids(test_labeled))),
    )
    train_emb = _embed_triplets(train_labeled, vectors)
    test_emb = _embed_triplets(test_labeled, vectors)
    if lam is None:
        lam = select_lambda(train_emb, list(cv_grid), folds=folds, seed=sub_seed(seed, "folds"))
        logger.info("cross-validation picked lambda=%g", lam)
    batch = TripletBatch(train_emb)
    weights = train(batch, lam)
    final_objective, _ = objective(weights, batch, lam)
    model = MetricModel(
        weights=weights,
        feature_config=config,
        pca=pca,
        lam=lam,
        training_meta={
            "n_train_triplets": len(train_labeled),
            "final_objective": final_objective,
            "seed": seed,
        },
    )
    dim = weights.shape[0]
    stats = {
        "config": config.name,
        "dims": dim,
        "lambda": lam,
        "train_accuracy": evaluate(weights, train_emb),
        "test_accuracy": evaluate(weights, test_emb),
        "baseline_accuracy": evaluate(baseline_weights(dim), test_emb),
    }
    return model, stats


def _load_split(args):
    features_table = read_features_jsonl(args.features)
    responses = read_triplets_csv(args.triplets)
    labeled, ties = label_all(responses)
    if ties:
        logger.info("excluding %d tied triplets from training", len(ties))
    from .triplets import split_train_test

    train_labeled, test_labeled = split_train_test(
        labeled, args.n_train, seed=sub_seed(args.seed, "split")
    )
    oracle = oracle_consistency(responses)
    return features_table, train_labeled, test_labeled, oracle


def _print_table3(rows, oracle, json_mode):
    if json_mode:
        print(json.dumps({"rows": rows, "oracle_accuracy": 100.0 * oracle}, indent=2))
        return
    table_rows = [
        [r["config"], str(r["dims"]), f"{100.0 * r['test_accuracy']:.2f}"] for r in rows
    ]
    best = max(rows, key=lambda r: r["test_accuracy"])
    table_rows.append(
        ["Baseline (no learning)", str(best["dims"]), f"{100.0 * best['baseline_accuracy']:.2f}"]
    )
    table_rows.append(["Oracle", "-", f"{100.0 * oracle:.2f}"])
    print(_format_table("Approach", ["Approach", "Dims", "Accuracy(%)"], table_rows))


def cmd_train(args) -> int:
    config = parse_config(args.config)
    cv_grid = [float(x) for x in args.cv_grid.split(",") if x.strip()]
    features_table, train_labeled, test_labeled, oracle = _load_split(args)
    model, stats = _train_on_split(
        features_table, train_labeled, test_labeled, config,
        args.lam, cv_grid, args.folds, args.seed,
    )
    model.save(args.out)
    logger.info("model written to %s", args.out)
    if args.json:
        print(json.dumps({**stats, "oracle_accuracy": 100.0 * oracle,
                          "model_path": args.out}, indent=2))
    else:
        print(f"train accuracy: {100.0 * stats['train_accuracy']:.2f}%  "
              f"(lambda={stats['lambda']:g}, {len(train_labeled)}/{len(test_labeled)} split)")
        _print_table3([stats], oracle, json_mode=False)
    return EXIT_OK


def cmd_ablate(args) -> int:
    configs = [parse_config(c) for c in args.configs]
    features_table, train_labeled, test_labeled, oracle = _load_split(args)
    rows = []
    for config in configs:
        _, stats = _train_on_split(
            features_table, train_labeled, test_labeled, config,
            args.lam, DEFAULT_CV_GRID, 5, args.seed,
        )
        logger.info("config %s: %.2f%%", config.name, 100.0 * stats["test_accuracy"])
        rows.append(stats)
    _print_table3(rows, oracle, json_mode=args.json)
    return EXIT_OK


# --------------------------------------------------------------------------
# index / search / serve

def cmd_index(args) -> int:
    model = MetricModel.load(args.model)
    features_table = read_features_jsonl(args.features)
    index = build_index(model, features_table)
    save_index(index, args.out)
    logger.info("indexed %d images to %s", len(index), args.out)
    return EXIT_OK


def cmd_search(args) -> int:
    model = MetricModel.load(args.model)
    index = load_index(args.index)
    if args.query in index:
        q = index.entries[args.query]
        exclude = None if args.include_self else args.query
    elif os.path.exists(args.query):
        q = embed_image(model, load_image(args.query))
        exclude = None
    else:
        raise InvalidParam(
            f"query {args.query!r} is neither an indexed id nor a readable file"
        )
    results = query(index, model, q, k=args.k, exclude_id=exclude)
    if args.json:
        print(json.dumps(
            {"query": args.query,
             "results": [{"id": i, "distance": d} for i, d in results]},
            indent=2,
        ))
    else:
        for image_id, dist in results:
            print(f"{image_id}\t{dist:.6f}")
    return EXIT_OK


def cmd_serve(args) -> int:
    model = MetricModel.load(args.model)
    index = load_index(args.index)
    corpus = load_corpus_paths(args.corpus) if args.corpus else {}
    host, _, port = args.addr.rpartition(":")
    app = service.AppState(model=model, index=index, corpus_paths=corpus,
                           ui_dir=args.ui_dir, cors_origin=args.cors_origin,
                           embed_workers=args.embed_workers)
    service.serve(app, host or "127.0.0.1", int(port))
    return EXIT_OK


_COMMANDS = {
    "extract": cmd_extract,
    "analyze": cmd_analyze,
    "train": cmd_train,
    "ablate": cmd_ablate,
    "index": cmd_index,
    "search": cmd_search,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except (InfostyleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
