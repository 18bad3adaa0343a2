"""Per-query relevance targets over index entries.

A reference point is relevant to a query when the two share at least one
label.  The target score of an entry is the relevant fraction of its
posting list; empty entries score 0.  Before cross-entropy training the
score vector is normalized to a distribution, and queries whose targets
are all zero are skipped (see build_training_targets).
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateTargetError
from .inverted_index import InvertedIndex

logger = logging.getLogger(__name__)

LabelSet = frozenset  # frozenset of nonnegative integer label ids


def is_relevant(query_labels: LabelSet, ref_labels: LabelSet) -> bool:
    """True iff the two label sets intersect."""
    return not frozenset(query_labels).isdisjoint(ref_labels)


@dataclass
class RelevanceTargets:
    """Entry scores in [0, 1] for one query; scores.size == 2^d."""

    scores: np.ndarray
    query_id: int | None = None


def compute_targets(
    query_labels: LabelSet,
    idx: InvertedIndex,
    ref_labels: Sequence[LabelSet],
) -> RelevanceTargets:
    """Relevant fraction of each entry's posting list, 0 for empty entries."""
    if len(ref_labels) != idx.n:
        raise ValueError(
            f"ref_labels has {len(ref_labels)} entries, index holds {idx.n}"
        )
    query_labels = frozenset(query_labels)
    rel_ids = [
        i for i, labels in enumerate(ref_labels)
        if not query_labels.isdisjoint(labels)
    ]
    assign = idx.entry_assignments()
    numerators = np.bincount(assign[rel_ids], minlength=idx.n_entries)
    sizes = idx.entry_sizes()
    scores = np.divide(
        numerators, sizes, out=np.zeros(idx.n_entries), where=sizes > 0
    )
    return RelevanceTargets(scores=scores)


def normalize_targets(targets: RelevanceTargets) -> np.ndarray:
    """Scale scores to sum to 1; raises DegenerateTargetError on all zeros."""
    total = targets.scores.sum()
    if total <= 0.0:
        raise DegenerateTargetError("all-zero relevance targets")
    return targets.scores / total


def labels_to_matrix(labels: Sequence[LabelSet], n_labels: int | None = None) -> np.ndarray:
    """(n, L) 0/1 membership matrix for vectorized relevance tests."""
    if n_labels is None:
        n_labels = max((max(ls) for ls in labels if ls), default=-1) + 1
    mat = np.zeros((len(labels), max(n_labels, 1)), dtype=np.uint8)
    for i, ls in enumerate(labels):
        for label in ls:
            mat[i, label] = 1
    return mat


def build_training_targets(
    query_labels: Sequence[LabelSet],
    idx: InvertedIndex,
    ref_labels: Sequence[LabelSet],
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized target rows for a batch of queries.

    Returns (targets, kept) where targets is (len(kept), 2^d) float64 with
    rows summing to 1, and kept holds the query positions that survived;
    all-zero target rows are dropped with a logged count.
    """
    if len(ref_labels) != idx.n:
        raise ValueError(
            f"ref_labels has {len(ref_labels)} entries, index holds {idx.n}"
        )
    n_labels = max(
        (max(ls) for ls in (*query_labels, *ref_labels) if ls), default=-1
    ) + 1
    qmat = labels_to_matrix(query_labels, n_labels)
    rmat = labels_to_matrix(ref_labels, n_labels)
    assign = idx.entry_assignments()
    sizes = idx.entry_sizes()

    raw = np.zeros((len(query_labels), idx.n_entries))
    for start in range(0, len(query_labels), 256):
        block = slice(start, min(start + 256, len(query_labels)))
        rel = (qmat[block].astype(np.int32) @ rmat.T.astype(np.int32)) > 0
        for j, row in enumerate(rel):
            numer = np.bincount(assign[row], minlength=idx.n_entries)
            raw[start + j] = np.divide(
                numer, sizes, out=np.zeros(idx.n_entries), where=sizes > 0
            )

    sums = raw.sum(axis=1)
    kept = np.nonzero(sums > 0)[0]
    if kept.size < len(query_labels):
        logger.warning(
            "skipped %d of %d queries with all-zero relevance targets",
            len(query_labels) - kept.size, len(query_labels),
        )
    return raw[kept] / sums[kept, None], kept
