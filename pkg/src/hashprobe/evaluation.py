"""Retrieval-quality and cost metrics, and the three-way method comparison.

MAP@R averages per-query precision over the top R retrieved items, with
missing ranks counting as irrelevant; queries that have no relevant
reference point at all are excluded from the mean (logged).  ARD% is the
mean fraction of reference points touched as rerank candidates.  Latency
is reported as the per-phase median across queries.
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import ReferenceDataset
from .inverted_index import CandidateBudget, InvertedIndex
from .predictor import PredictorModel
from .relevance import is_relevant, labels_to_matrix
from .search import Query, SearchResult, search_dnn, search_exhaustive, search_naive

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "method", "R", "map", "ard_percent",
    "predict_ms", "rank_ms", "rerank_ms", "total_ms",
)

METHODS = ("dnn", "exhaustive", "naive")


def average_precision_at_r(
    result: SearchResult,
    query_labels: frozenset,
    ref_labels: Sequence[frozenset],
    r: int,
) -> float:
    """(1/R) * sum_{j<=R} precision@j * rel(j); short lists pad rel=0."""
    if r < 1:
        raise ValueError("R must be >= 1")
    hits = 0
    total = 0.0
    for j, ref_id in enumerate(result.neighbor_ids[:r], start=1):
        if is_relevant(query_labels, ref_labels[ref_id]):
            hits += 1
            total += hits / j
    return total / r


def _queries_with_relevant_refs(
    query_labels: Sequence[frozenset], ref_labels: Sequence[frozenset]
) -> np.ndarray:
    """Boolean mask of queries that have at least one relevant reference."""
    n_labels = max(
        (max(ls) for ls in (*query_labels, *ref_labels) if ls), default=-1
    ) + 1
    qmat = labels_to_matrix(query_labels, n_labels).astype(np.int32)
    rmat = labels_to_matrix(ref_labels, n_labels).astype(np.int32)
    return (qmat @ rmat.sum(axis=0)) > 0


def map_at_r(
    results: Sequence[SearchResult],
    query_labels: Sequence[frozenset],
    ref_labels: Sequence[frozenset],
    r: int,
) -> float:
    """Mean AP@R over queries that have relevant reference points."""
    if len(results) == 0:
        raise ValueError("need at least one query result")
    if len(results) != len(query_labels):
        raise ValueError("results and query_labels must pair up")
    eligible = _queries_with_relevant_refs(query_labels, ref_labels)
    if not eligible.any():
        raise ValueError("no query has a relevant reference point")
    skipped = int((~eligible).sum())
    if skipped:
        logger.info("map_at_r: excluded %d queries with no relevant points", skipped)
    aps = [
        average_precision_at_r(res, labels, ref_labels, r)
        for res, labels, ok in zip(results, query_labels, eligible)
        if ok
    ]
    return float(np.mean(aps))


def ard_percent(results: Sequence[SearchResult], n_ref: int) -> float:
    """Mean over queries of candidates-examined / N * 100."""
    if n_ref < 1:
        raise ValueError("n_ref must be >= 1")
    if len(results) == 0:
        raise ValueError("need at least one query result")
    counts = np.array([res.candidates_examined for res in results], dtype=np.float64)
    return float(np.mean(counts / n_ref * 100.0))


@dataclass(frozen=True)
class ExperimentConfig:
    budget: CandidateBudget
    r_grid: tuple = (10, 20, 30, 40, 50)
    k: int | None = None  # neighbors to retrieve; defaults to max(r_grid)
    threads: int = 1
    seed: int | None = None  # echoed into the report only

    def __post_init__(self):
        if len(self.r_grid) == 0 or any(r < 1 for r in self.r_grid):
            raise ValueError("r_grid must be non-empty positive integers")
        if self.k is not None and self.k < max(self.r_grid):
            raise ValueError("k must cover the largest R in the grid")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class MethodReport:
    map_at_r: dict
    ard_percent: float
    predict_ms: float
    rank_ms: float
    rerank_ms: float
    total_ms: float
    n_queries: int = 0


@dataclass
class EvalReport:
    per_method: dict
    config: dict = field(default_factory=dict)


def _run_queries(search_one, queries: Sequence[Query], threads: int):
    if threads == 1:
        return [search_one(q) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(search_one, queries))


def run_experiment(
    refs: ReferenceDataset,
    queries: Sequence[Query],
    model: PredictorModel,
    idx: InvertedIndex,
    cfg: ExperimentConfig,
    out_csv=None,
) -> EvalReport:
    """Evaluate exhaustive, naive, and dnn search on the full query set."""
    if len(queries) == 0:
        raise ValueError("empty query set")
    n_ref = len(refs.codes)
    if idx.n != n_ref:
        raise ValueError(f"index holds {idx.n} ids but dataset has {n_ref}")
    if model.d != idx.d:
        raise ValueError(f"model d={model.d} does not match index d={idx.d}")
    if queries[0].features.size != model.feature_dim:
        raise ValueError(
            f"query feature dim {queries[0].features.size} "
            f"!= model input dim {model.feature_dim}"
        )
    if queries[0].code.length != refs.codes.length:
        raise ValueError(
            f"query code length {queries[0].code.length} "
            f"!= reference code length {refs.codes.length}"
        )

    k = cfg.k if cfg.k is not None else max(cfg.r_grid)
    runners = {
        "exhaustive": lambda q: search_exhaustive(q, refs, k),
        "naive": lambda q: search_naive(q, idx, refs, k, cfg.budget),
        "dnn": lambda q: search_dnn(q, model, idx, refs, k, cfg.budget),
    }
    query_labels = [q.labels for q in queries]

    per_method = {}
    for method in METHODS:
        results = _run_queries(runners[method], queries, cfg.threads)
        per_method[method] = MethodReport(
            map_at_r={
                r: map_at_r(results, query_labels, refs.labels, r)
                for r in sorted(cfg.r_grid)
            },
            ard_percent=ard_percent(results, n_ref),
            predict_ms=float(np.median([s.timings.predict_ms for s in results])),
            rank_ms=float(np.median([s.timings.rank_ms for s in results])),
            rerank_ms=float(np.median([s.timings.rerank_ms for s in results])),
            total_ms=float(np.median([s.timings.total_ms for s in results])),
            n_queries=len(results),
        )

    report = EvalReport(
        per_method=per_method,
        config={
            "c": refs.codes.length,
            "d": idx.d,
            "N": n_ref,
            "Q": len(queries),
            "budget": cfg.budget,
            "k": k,
            "seed": cfg.seed,
        },
    )
    if out_csv is not None:
        write_report_csv(out_csv, report)
    return report


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def write_report_csv(path, report: EvalReport) -> None:
    """One row per (method, R); methods lexical, R ascending; 6 sig digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for method in sorted(report.per_method):
            m = report.per_method[method]
            for r in sorted(m.map_at_r):
                writer.writerow([
                    method, r, _fmt(m.map_at_r[r]), _fmt(m.ard_percent),
                    _fmt(m.predict_ms), _fmt(m.rank_ms), _fmt(m.rerank_ms),
                    _fmt(m.total_ms),
                ])


def read_report_csv(path) -> list[dict]:
    """Rows back as dicts with numeric fields parsed."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected report header {reader.fieldnames}")
        rows = []
        for row in reader:
            parsed = {"method": row["method"], "R": int(row["R"])}
            for key in CSV_HEADER[2:]:
                parsed[key] = float(row[key])
            rows.append(parsed)
        return rows
