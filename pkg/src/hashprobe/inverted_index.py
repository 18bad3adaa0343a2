"""Inverted table over d-bit code prefixes.

The table is stored CSR style: a (2^d + 1) offset array into one id array
sorted by (entry, id).  That keeps entry lookup O(1), makes posting lists
ascending by construction, and maps 1:1 onto the index file format.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .bitcode import MAX_INDEX_BITS, BitCode, PackedCodes, prefix_codes


@dataclass(frozen=True)
class CandidateBudget:
    """Either probe the first `top_entries` ranked entries, or consume whole
    entries in rank order until `min_count` candidates are collected."""

    top_entries: int | None = None
    min_count: int | None = None

    def __post_init__(self):
        if (self.top_entries is None) == (self.min_count is None):
            raise ValueError("set exactly one of top_entries / min_count")
        if self.top_entries is not None and self.top_entries < 1:
            raise ValueError("top_entries must be >= 1")
        if self.min_count is not None and self.min_count < 1:
            raise ValueError("min_count must be >= 1")

    @classmethod
    def top(cls, r: int) -> "CandidateBudget":
        return cls(top_entries=r)

    @classmethod
    def count(cls, n: int) -> "CandidateBudget":
        return cls(min_count=n)


@dataclass
class InvertedIndex:
    """2^d posting lists partitioning reference ids {0, ..., n-1}."""

    d: int
    offsets: np.ndarray  # (2^d + 1,) int64
    ids: np.ndarray      # (n,) uint32, ascending within each entry

    @property
    def n(self) -> int:
        return int(self.offsets[-1])

    @property
    def n_entries(self) -> int:
        return 1 << self.d

    def posting(self, x: int) -> np.ndarray:
        return self.ids[self.offsets[x] : self.offsets[x + 1]]

    def entry_size(self, x: int) -> int:
        """Posting-list length of entry x (0 for empty entries)."""
        if not 0 <= x < self.n_entries:
            raise ValueError(f"index code {x} out of range [0, {self.n_entries})")
        return int(self.offsets[x + 1] - self.offsets[x])

    def entry_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def entry_assignments(self) -> np.ndarray:
        """(n,) array mapping reference id -> its entry value."""
        assign = np.empty(self.n, dtype=np.int64)
        assign[self.ids] = np.repeat(
            np.arange(self.n_entries, dtype=np.int64), self.entry_sizes()
        )
        return assign


def build_index(
    codes: Union[PackedCodes, Sequence[BitCode]], d: int
) -> InvertedIndex:
    """Partition reference ids by their d-bit index code."""
    if not isinstance(codes, PackedCodes):
        codes = PackedCodes.from_codes(codes)
    if len(codes) == 0:
        raise ValueError("cannot index an empty dataset")
    if not 1 <= d <= min(codes.length, MAX_INDEX_BITS):
        raise ValueError(
            f"d={d} out of range [1, {min(codes.length, MAX_INDEX_BITS)}]"
        )
    entries = prefix_codes(codes, d)
    counts = np.bincount(entries, minlength=1 << d)
    offsets = np.zeros((1 << d) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    # Stable sort on entry keeps ids ascending within each posting list.
    order = np.argsort(entries, kind="stable")
    return InvertedIndex(d=d, offsets=offsets, ids=order.astype(np.uint32))


def entry_size(idx: InvertedIndex, x: int) -> int:
    """Posting-list length of entry x (0 for empty entries)."""
    return idx.entry_size(x)


def probe_entries(
    idx: InvertedIndex, ranked_codes: Sequence[int], budget: CandidateBudget
) -> tuple[np.ndarray, int]:
    """Candidate ids plus the number of entries consumed.

    Entries are always consumed whole, in the given rank order.  Empty
    entries cost nothing but still count as probed.
    """
    ranked = np.asarray(ranked_codes, dtype=np.int64)
    if ranked.ndim != 1 or ranked.size == 0:
        raise ValueError("ranked_codes must be a non-empty 1-D sequence")
    if ranked.min() < 0 or ranked.max() >= idx.n_entries:
        raise ValueError("ranked_codes contains an out-of-range index code")

    if budget.top_entries is not None:
        used = min(budget.top_entries, ranked.size)
    else:
        if budget.min_count > idx.n:
            raise ValueError(
                f"candidate count {budget.min_count} exceeds dataset size {idx.n}"
            )
        sizes = (idx.offsets[ranked + 1] - idx.offsets[ranked]).cumsum()
        reached = np.nonzero(sizes >= budget.min_count)[0]
        used = int(reached[0]) + 1 if reached.size else ranked.size

    parts = [idx.posting(int(x)) for x in ranked[:used]]
    ids = np.concatenate(parts) if parts else np.empty(0, dtype=np.uint32)
    return ids, used


def gather_candidates(
    idx: InvertedIndex, ranked_codes: Sequence[int], budget: CandidateBudget
) -> np.ndarray:
    """Reference ids from the top-ranked entries, concatenated in rank order.

    ranked_codes should be distinct; the partition invariant then guarantees
    the result has no duplicates.
    """
    ids, _ = probe_entries(idx, ranked_codes, budget)
    return ids
