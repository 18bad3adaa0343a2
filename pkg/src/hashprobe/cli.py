"""Command-line front end: generate, index, train, search, evaluate.

Every subcommand validates its flags before touching the filesystem, exits
0 on success, and reports any failure as a single diagnostic line naming
the stage.  Set HASHPROBE_LOG to error/warn/info/debug to control library
logging.
"""

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dataio, datagen, evaluation, figures, predictor
from .bitcode import MAX_INDEX_BITS
from .errors import DegenerateTargetError, FormatError, TrainingDivergedError
from .inverted_index import CandidateBudget, build_index
from .relevance import build_training_targets
from .search import Query, search_dnn, search_exhaustive, search_naive

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

DEFAULT_ARD_FRACTION = 0.003  # default candidate budget: ~0.3% of the reference set


def _configure_logging() -> None:
    name = os.environ.get("HASHPROBE_LOG", "warn").lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _parse_grid(text: str) -> tuple:
    try:
        grid = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad R grid {text!r}")
    if not grid or any(r < 1 for r in grid):
        raise argparse.ArgumentTypeError("R grid needs positive integers")
    return grid


def _budget_from_args(args, n_ref: int) -> CandidateBudget:
    if args.top_entries is not None and args.candidate_count is not None:
        raise ValueError("give only one of --top-entries / --candidate-count")
    if args.top_entries is not None:
        return CandidateBudget.top(args.top_entries)
    if args.candidate_count is not None:
        return CandidateBudget.count(args.candidate_count)
    return CandidateBudget.count(max(1, round(DEFAULT_ARD_FRACTION * n_ref)))


def cmd_gen(args) -> int:
    cfg = datagen.SynthConfig(
        n_ref=args.n,
        n_queries=args.train_queries + args.queries,
        n_labels=args.labels,
        f_img=args.f_img,
        f_txt=args.f_txt,
        latent_dim=args.latent_dim,
        code_len=args.c,
        sigma=args.sigma,
        label_multiplicity=args.multiplicity,
        seed=args.seed,
    )
    refs, queries = datagen.generate(cfg)
    manifest = dataio.save_dataset(
        args.out,
        refs,
        queries[: args.train_queries],
        queries[args.train_queries :],
        extra={"seed": args.seed, "sigma": args.sigma, "n_labels": args.labels},
    )
    print(
        f"wrote {manifest}: N={cfg.n_ref} c={cfg.code_len} "
        f"train={args.train_queries} eval={args.queries}"
    )
    return 0


def cmd_index(args) -> int:
    if not 1 <= args.d <= MAX_INDEX_BITS:
        raise ValueError(f"--d must be in [1, {MAX_INDEX_BITS}]")
    refs, _, _, _ = dataio.load_dataset(args.manifest)
    idx = build_index(refs.codes, args.d)
    dataio.save_index(args.out, idx)
    sizes = idx.entry_sizes()
    nonempty = sizes[sizes > 0]
    print(
        f"wrote {args.out}: d={idx.d} entries={idx.n_entries} "
        f"non-empty={nonempty.size} ({100.0 * nonempty.size / idx.n_entries:.2f}%) "
        f"max={int(nonempty.max()) if nonempty.size else 0} "
        f"mean={float(nonempty.mean()) if nonempty.size else 0.0:.2f}"
    )
    return 0


def cmd_train(args) -> int:
    refs, train_queries, _, _ = dataio.load_dataset(args.manifest)
    idx = dataio.load_index(args.index)
    if idx.n != len(refs.codes):
        raise ValueError(
            f"index holds {idx.n} ids but reference set has {len(refs.codes)}"
        )
    if not train_queries:
        raise ValueError("manifest has no training queries")

    features = np.stack([q.features for q in train_queries]).astype(np.float64)
    targets, kept = build_training_targets(
        [q.labels for q in train_queries], idx, refs.labels
    )
    if kept.size == 0:
        raise ValueError("every training query has all-zero relevance targets")

    model = predictor.init_model(features.shape[1], idx.d, args.seed)
    cfg = predictor.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        optimizer=args.optimizer,
        seed=args.seed,
    )
    trace = predictor.train(model, features[kept], targets, cfg)
    predictor.save_model(args.out, model)

    loss_path = Path(args.out).with_suffix(".losses.csv")
    with open(loss_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, value in enumerate(trace, start=1):
            writer.writerow([epoch, f"{value:.10g}"])
    print(
        f"wrote {args.out} and {loss_path}: samples={kept.size} "
        f"epochs={cfg.epochs} final-loss={trace[-1]:.6g}"
    )
    return 0


def _single_query(args, refs, eval_queries) -> Query:
    if (args.query_id is None) == (args.features is None):
        raise ValueError("give exactly one of --query-id / --features")
    if args.query_id is not None:
        if not 0 <= args.query_id < len(eval_queries):
            raise ValueError(
                f"--query-id out of range [0, {len(eval_queries)})"
            )
        return eval_queries[args.query_id]
    if args.codes is None:
        raise ValueError("--features also needs --codes for the rerank stage")
    feats = dataio.load_features(args.features)
    codes = dataio.load_codes(args.codes)
    if not 0 <= args.row < len(codes) or args.row >= feats.shape[0]:
        raise ValueError(f"--row out of range for the given files")
    return Query(features=feats[args.row], code=codes.row(args.row), labels=frozenset())


def cmd_search(args) -> int:
    refs, _, eval_queries, _ = dataio.load_dataset(args.manifest)
    query = _single_query(args, refs, eval_queries)

    if args.method == "exhaustive":
        result = search_exhaustive(query, refs, args.k)
    else:
        idx = dataio.load_index(args.index)
        budget = _budget_from_args(args, len(refs.codes))
        if args.method == "naive":
            result = search_naive(query, idx, refs, args.k, budget)
        else:
            model = predictor.load_model(args.model)
            result = search_dnn(query, model, idx, refs, args.k, budget)

    n_ref = len(refs.codes)
    print(
        f"# method={args.method} k={args.k} candidates={result.candidates_examined} "
        f"ard={100.0 * result.candidates_examined / n_ref:.4g}% "
        f"entries={result.entries_probed}"
    )
    for rank, (ref_id, dist) in enumerate(result.neighbors, start=1):
        print(f"{rank}\t{ref_id}\t{dist}")
    return 0


def cmd_eval(args) -> int:
    refs, _, eval_queries, _ = dataio.load_dataset(args.manifest)
    idx = dataio.load_index(args.index)
    model = predictor.load_model(args.model)
    cfg = evaluation.ExperimentConfig(
        budget=_budget_from_args(args, len(refs.codes)),
        r_grid=args.map_grid,
        k=args.k,
        threads=args.threads,
        seed=args.seed,
    )
    report = evaluation.run_experiment(
        refs, eval_queries, model, idx, cfg, out_csv=args.out
    )
    written = [Path(args.out)]
    if not args.no_figures:
        written += figures.render_report_figures(report, args.out)
    top_r = max(cfg.r_grid)
    for method in sorted(report.per_method):
        m = report.per_method[method]
        print(
            f"{method}: MAP@{top_r}={m.map_at_r[top_r]:.4f} "
            f"ARD={m.ard_percent:.4g}% total={m.total_ms:.3g}ms"
        )
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hashprobe",
        description="Inverted-index NN search over binary hash codes "
        "with a learned entry ranker.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic two-modality dataset")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--n", type=int, default=10000, help="reference set size")
    gen.add_argument("--queries", type=int, default=500, help="evaluation query count")
    gen.add_argument("--train-queries", type=int, default=2000,
                     help="training query count")
    gen.add_argument("--labels", type=int, default=16, help="label count")
    gen.add_argument("--f-img", type=int, default=64, help="image feature dim")
    gen.add_argument("--f-txt", type=int, default=64, help="text feature dim")
    gen.add_argument("--latent-dim", type=int, default=16, help="latent space dim")
    gen.add_argument("--c", type=int, default=32, help="hash code length in bits")
    gen.add_argument("--sigma", type=float, default=0.25, help="cluster spread")
    gen.add_argument("--multiplicity", type=int, default=1, help="labels per point")
    gen.add_argument("--seed", type=int, default=0, help="generator seed")
    gen.set_defaults(func=cmd_gen)

    index = sub.add_parser("index", help="build the inverted prefix index")
    index.add_argument("--manifest", required=True, help="dataset manifest")
    index.add_argument("--d", type=int, default=14, help="index code bits (<= 24)")
    index.add_argument("--out", required=True, help="index file to write")
    index.set_defaults(func=cmd_index)

    train = sub.add_parser("train", help="train the entry-relevance predictor")
    train.add_argument("--manifest", required=True, help="dataset manifest")
    train.add_argument("--index", required=True, help="index file")
    train.add_argument("--out", required=True, help="model file to write")
    train.add_argument("--epochs", type=int, default=100, help="training epochs")
    train.add_argument("--batch", type=int, default=64, help="mini-batch size")
    train.add_argument("--lr", type=float, default=1e-3, help="learning rate")
    train.add_argument("--optimizer", choices=("adam", "sgd-momentum"),
                       default="adam", help="optimizer")
    train.add_argument("--seed", type=int, default=0, help="init/shuffle seed")
    train.set_defaults(func=cmd_train)

    search = sub.add_parser("search", help="run one query and print neighbors")
    search.add_argument("--manifest", required=True, help="dataset manifest")
    search.add_argument("--index", help="index file (naive/dnn)")
    search.add_argument("--model", help="model file (dnn)")
    search.add_argument("--method", choices=("exhaustive", "naive", "dnn"),
                        default="dnn", help="search strategy")
    search.add_argument("--k", type=int, default=10, help="neighbors to return")
    search.add_argument("--query-id", type=int,
                        help="row in the manifest's eval-query split")
    search.add_argument("--features", help="feature file (HPFV) for an ad-hoc query")
    search.add_argument("--codes", help="code file (HPBC) paired with --features")
    search.add_argument("--row", type=int, default=0,
                        help="row to take from --features/--codes")
    search.add_argument("--top-entries", type=int, help="probe the first R entries")
    search.add_argument("--candidate-count", type=int,
                        help="probe whole entries until this many candidates")
    search.add_argument("--threads", type=int, default=1, help="worker threads")
    search.set_defaults(func=cmd_search)

    ev = sub.add_parser("eval", help="compare the three strategies, write CSV+figures")
    ev.add_argument("--manifest", required=True, help="dataset manifest")
    ev.add_argument("--index", required=True, help="index file")
    ev.add_argument("--model", required=True, help="model file")
    ev.add_argument("--k", type=int, default=None,
                    help="neighbors per query (default: max of --map-grid)")
    ev.add_argument("--map-grid", type=_parse_grid, default=(10, 20, 30, 40, 50),
                    help="comma-separated R grid for MAP@R")
    ev.add_argument("--top-entries", type=int, help="probe the first R entries")
    ev.add_argument("--candidate-count", type=int,
                    help="probe whole entries until this many candidates "
                    "(default: ~0.3%% of N)")
    ev.add_argument("--threads", type=int, default=1,
                    help="query-level parallelism (default 1 for stable timings)")
    ev.add_argument("--seed", type=int, default=None, help="seed echoed into report")
    ev.add_argument("--out", required=True, help="report CSV path")
    ev.add_argument("--no-figures", action="store_true",
                    help="skip rendering PNG figures next to the CSV")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FormatError, OSError,
            DegenerateTargetError, TrainingDivergedError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
