"""Per-entry relevance scores and training-target construction."""

import numpy as np
import pytest

from hashprobe.bitcode import PackedCodes
from hashprobe.errors import DegenerateTargetError
from hashprobe.inverted_index import build_index
from hashprobe.relevance import (
    RelevanceTargets,
    build_training_targets,
    compute_targets,
    is_relevant,
    normalize_targets,
)


def test_is_relevant():
    assert is_relevant(frozenset({1, 3}), frozenset({3, 7}))
    assert not is_relevant(frozenset({1}), frozenset({2}))
    assert not is_relevant(frozenset(), frozenset({1}))


def random_instance(rng, n_max=200, d_max=4, n_labels=8):
    n = int(rng.integers(1, n_max + 1))
    c = int(rng.integers(d_max, 16))
    d = int(rng.integers(1, d_max + 1))
    mat = rng.integers(0, 2, size=(n, c), dtype=np.uint8)
    codes = PackedCodes.from_bits(mat)
    idx = build_index(codes, d)
    ref_labels = [
        frozenset(rng.choice(n_labels, size=rng.integers(1, 3), replace=False).tolist())
        for _ in range(n)
    ]
    q_labels = frozenset(
        rng.choice(n_labels, size=rng.integers(1, 3), replace=False).tolist()
    )
    return idx, ref_labels, q_labels


def oracle_targets(q_labels, idx, ref_labels):
    """Double-loop restatement: relevant members / entry size, 0 for empty."""
    scores = np.zeros(idx.n_entries)
    for x in range(idx.n_entries):
        members = idx.posting(x)
        if members.size == 0:
            continue
        rel = sum(1 for i in members if q_labels & ref_labels[i])
        scores[x] = rel / members.size
    return scores


def test_compute_targets_hand_case():
    # entry 0 has 4 members, 3 relevant -> 0.75; entry 1 empty -> 0
    codes = PackedCodes.from_bits(
        np.array([[0, 0], [0, 1], [0, 0], [0, 1]], dtype=np.uint8)
    )
    idx = build_index(codes, 1)
    ref_labels = [frozenset({1}), frozenset({1}), frozenset({1}), frozenset({2})]
    t = compute_targets(frozenset({1}), idx, ref_labels)
    assert t.scores[0] == 0.75
    # all four points relevant -> every non-empty entry scores 1.0
    t_all = compute_targets(frozenset({1, 2}), idx, ref_labels)
    np.testing.assert_array_equal(t_all.scores[idx.entry_sizes() > 0], 1.0)


def test_compute_targets_empty_entry_zero():
    codes = PackedCodes.from_bits(np.array([[0, 0, 1]], dtype=np.uint8))
    idx = build_index(codes, 2)
    t = compute_targets(frozenset({1}), idx, [frozenset({1})])
    assert t.scores[0b01] == 0.0  # empty
    assert t.scores[0b00] == 1.0


def test_compute_targets_matches_oracle():
    rng = np.random.default_rng(31)
    for _ in range(50):
        idx, ref_labels, q_labels = random_instance(rng)
        got = compute_targets(q_labels, idx, ref_labels).scores
        np.testing.assert_array_equal(got, oracle_targets(q_labels, idx, ref_labels))


def test_targets_times_sizes_recovers_relevant_count():
    rng = np.random.default_rng(32)
    for _ in range(50):
        idx, ref_labels, q_labels = random_instance(rng)
        scores = compute_targets(q_labels, idx, ref_labels).scores
        sizes = idx.entry_sizes()
        per_entry = scores * sizes
        # each product reconstructs an integer numerator
        np.testing.assert_allclose(per_entry, np.round(per_entry), atol=1e-9)
        total = int(np.round(per_entry).sum())
        assert total == sum(1 for l in ref_labels if q_labels & l)


def test_targets_bounds():
    rng = np.random.default_rng(33)
    for _ in range(30):
        idx, ref_labels, q_labels = random_instance(rng)
        scores = compute_targets(q_labels, idx, ref_labels).scores
        assert scores.shape == (idx.n_entries,)
        assert np.all(scores >= 0.0) and np.all(scores <= 1.0)
        assert np.all(scores[idx.entry_sizes() == 0] == 0.0)


def test_compute_targets_label_count_mismatch():
    codes = PackedCodes.from_bits(np.array([[0, 1]], dtype=np.uint8))
    idx = build_index(codes, 1)
    with pytest.raises(ValueError):
        compute_targets(frozenset({1}), idx, [frozenset({1}), frozenset({2})])


def test_normalize_targets():
    np.testing.assert_array_equal(
        normalize_targets(RelevanceTargets(np.array([0.75, 0.25, 0.0, 0.0]))),
        [0.75, 0.25, 0.0, 0.0],
    )
    np.testing.assert_array_equal(
        normalize_targets(RelevanceTargets(np.array([0.5, 0.5, 0.5, 0.5]))),
        [0.25, 0.25, 0.25, 0.25],
    )
    with pytest.raises(DegenerateTargetError):
        normalize_targets(RelevanceTargets(np.zeros(4)))


def test_build_training_targets_skips_degenerate():
    codes = PackedCodes.from_bits(np.array([[0, 0], [1, 0]], dtype=np.uint8))
    idx = build_index(codes, 1)
    ref_labels = [frozenset({1}), frozenset({2})]
    queries = [frozenset({1}), frozenset({9}), frozenset({2})]
    targets, kept = build_training_targets(queries, idx, ref_labels)
    np.testing.assert_array_equal(kept, [0, 2])
    assert targets.shape == (2, 2)
    np.testing.assert_allclose(targets.sum(axis=1), 1.0)
    np.testing.assert_array_equal(targets[0], [1.0, 0.0])
    np.testing.assert_array_equal(targets[1], [0.0, 1.0])


def test_build_training_targets_matches_single_query_path():
    rng = np.random.default_rng(34)
    idx, ref_labels, _ = random_instance(rng, n_max=120)
    queries = [
        frozenset(rng.choice(8, size=rng.integers(1, 3), replace=False).tolist())
        for _ in range(40)
    ]
    targets, kept = build_training_targets(queries, idx, ref_labels)
    row = 0
    for j, q in enumerate(queries):
        raw = compute_targets(q, idx, ref_labels).scores
        if raw.sum() == 0:
            assert j not in kept
            continue
        np.testing.assert_allclose(targets[row], raw / raw.sum(), rtol=0, atol=1e-15)
        row += 1
    assert row == kept.size
