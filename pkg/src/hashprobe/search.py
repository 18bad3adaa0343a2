"""The three retrieval strategies: exhaustive scan, prefix-probed index
search, and predictor-guided index search.

All ties break by ascending numeric value (entry value while ranking
entries, reference id while reranking), so identical inputs give identical
neighbor lists and full-coverage budgets reduce exactly to the exhaustive
result.
"""

import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .bitcode import BitCode, extract_index_code, hamming_to_all
from .inverted_index import CandidateBudget, InvertedIndex, probe_entries
from .predictor import PredictorModel, forward

if TYPE_CHECKING:
    from .datagen import ReferenceDataset


@dataclass
class Query:
    features: np.ndarray
    code: BitCode
    labels: frozenset


@dataclass
class Timings:
    predict_ms: float = 0.0
    rank_ms: float = 0.0
    rerank_ms: float = 0.0

    @property
    def total_ms(self) -> float:
        return self.predict_ms + self.rank_ms + self.rerank_ms


@dataclass
class SearchResult:
    neighbor_ids: np.ndarray
    neighbor_distances: np.ndarray
    candidates_examined: int
    entries_probed: int
    scores_considered: int  # entry scores touched while ranking (0, or 2^d)
    timings: Timings = field(default_factory=Timings)

    @property
    def neighbors(self) -> list[tuple[int, int]]:
        return list(zip(self.neighbor_ids.tolist(), self.neighbor_distances.tolist()))


def _top_k(ids: np.ndarray, dists: np.ndarray, k: int):
    order = np.lexsort((ids, dists))[:k]
    return ids[order], dists[order]


def _rerank(code: BitCode, candidate_ids: np.ndarray, refs, k: int):
    if candidate_ids.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    row = np.frombuffer(code.packed, dtype=np.uint8)
    if code.length != refs.codes.length:
        raise ValueError(
            f"query code length {code.length} != dataset length {refs.codes.length}"
        )
    sub = refs.codes.data[candidate_ids]
    dists = np.bitwise_count(sub ^ row).sum(axis=1, dtype=np.int64)
    return _top_k(candidate_ids.astype(np.int64), dists, k)


def search_exhaustive(q: Query, refs: "ReferenceDataset", k: int) -> SearchResult:
    """Hamming-scan every reference point and keep the k nearest."""
    if k < 1:
        raise ValueError("k must be >= 1")
    t0 = time.perf_counter()
    dists = hamming_to_all(q.code, refs.codes)
    ids, dists = _top_k(np.arange(dists.size, dtype=np.int64), dists, k)
    rerank_ms = (time.perf_counter() - t0) * 1e3
    return SearchResult(
        neighbor_ids=ids,
        neighbor_distances=dists,
        candidates_examined=len(refs.codes),
        entries_probed=0,
        scores_considered=0,
        timings=Timings(rerank_ms=rerank_ms),
    )


def search_naive(
    q: Query,
    idx: InvertedIndex,
    refs: "ReferenceDataset",
    k: int,
    budget: CandidateBudget,
) -> SearchResult:
    """Probe entries by Hamming distance between the query's own d-bit
    prefix and each entry value (multi-probe; exact-match-only is the
    special case top_entries=1), then rerank candidates by full-code
    distance."""
    if k < 1:
        raise ValueError("k must be >= 1")
    t0 = time.perf_counter()
    own = extract_index_code(q.code, idx.d)
    values = np.arange(idx.n_entries, dtype=np.int64)
    entry_dists = np.bitwise_count(values ^ own)
    ranked = np.lexsort((values, entry_dists))
    candidates, probed = probe_entries(idx, ranked, budget)
    rank_ms = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    ids, dists = _rerank(q.code, candidates, refs, k)
    rerank_ms = (time.perf_counter() - t0) * 1e3
    return SearchResult(
        neighbor_ids=ids,
        neighbor_distances=dists,
        candidates_examined=int(candidates.size),
        entries_probed=probed,
        scores_considered=idx.n_entries,
        timings=Timings(rank_ms=rank_ms, rerank_ms=rerank_ms),
    )


def search_dnn(
    q: Query,
    model: PredictorModel,
    idx: InvertedIndex,
    refs: "ReferenceDataset",
    k: int,
    budget: CandidateBudget,
) -> SearchResult:
    """Probe entries by predicted relevance (descending, ties by entry
    value), then rerank candidates by full-code Hamming distance."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if model.d != idx.d:
        raise ValueError(f"model d={model.d} does not match index d={idx.d}")
    t0 = time.perf_counter()
    scores = forward(model, q.features)
    predict_ms = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    values = np.arange(idx.n_entries, dtype=np.int64)
    ranked = np.lexsort((values, -scores))
    candidates, probed = probe_entries(idx, ranked, budget)
    rank_ms = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    ids, dists = _rerank(q.code, candidates, refs, k)
    rerank_ms = (time.perf_counter() - t0) * 1e3
    return SearchResult(
        neighbor_ids=ids,
        neighbor_distances=dists,
        candidates_examined=int(candidates.size),
        entries_probed=probed,
        scores_considered=idx.n_entries,
        timings=Timings(predict_ms=predict_ms, rank_ms=rank_ms, rerank_ms=rerank_ms),
    )
