"""Search strategies: exhaustive scan, naive multi-probe, learned entry ranking."""

import numpy as np
import pytest

from hashprobe.bitcode import PackedCodes, extract_index_code, pack_code
from hashprobe.datagen import ReferenceDataset
from hashprobe.inverted_index import CandidateBudget, build_index
from hashprobe.predictor import TrainConfig, init_model, train
from hashprobe.relevance import build_training_targets
from hashprobe.search import Query, search_dnn, search_exhaustive, search_naive


def refs_from_strings(rows, labels=None):
    mat = np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)
    codes = PackedCodes.from_bits(mat)
    if labels is None:
        labels = [frozenset({0})] * len(rows)
    return ReferenceDataset(codes=codes, labels=labels)


def make_query(code_str, features=None, labels=frozenset()):
    code = pack_code([int(ch) for ch in code_str])
    if features is None:
        features = np.zeros(2)
    return Query(features=np.asarray(features, dtype=np.float64),
                 code=code, labels=labels)


def test_exhaustive_hand_case():
    refs = refs_from_strings(["000", "011", "111"])
    res = search_exhaustive(make_query("001"), refs, 3)
    np.testing.assert_array_equal(res.neighbor_ids, [0, 1, 2])
    np.testing.assert_array_equal(res.neighbor_distances, [1, 1, 2])
    assert res.candidates_examined == 3
    assert res.scores_considered == 0


def test_exhaustive_exact_match_first():
    refs = refs_from_strings(["101", "010", "110"])
    res = search_exhaustive(make_query("010"), refs, 1)
    assert res.neighbors == [(1, 0)]


def test_exhaustive_k_clamped_to_n():
    refs = refs_from_strings(["00", "01"])
    res = search_exhaustive(make_query("00"), refs, 10)
    assert len(res.neighbors) == 2


def test_exhaustive_k_validation():
    refs = refs_from_strings(["00"])
    with pytest.raises(ValueError):
        search_exhaustive(make_query("00"), refs, 0)


def test_exhaustive_code_length_mismatch():
    refs = refs_from_strings(["000"])
    with pytest.raises(ValueError):
        search_exhaustive(make_query("0000"), refs, 1)


def test_naive_full_coverage_equals_exhaustive():
    rng = np.random.default_rng(21)
    mat = rng.integers(0, 2, size=(80, 12), dtype=np.uint8)
    refs = ReferenceDataset(codes=PackedCodes.from_bits(mat),
                            labels=[frozenset({0})] * 80)
    idx = build_index(refs.codes, 4)
    for _ in range(10):
        q = make_query("".join(map(str, rng.integers(0, 2, size=12))))
        full = search_naive(q, idx, refs, 7, CandidateBudget.top(2**4))
        exact = search_exhaustive(q, refs, 7)
        assert full.neighbors == exact.neighbors
        assert full.candidates_examined == 80


def test_naive_own_entry_first():
    # query prefix 00 -> entry 0b00 holds ids {0, 2}; budget of one entry
    refs = refs_from_strings(["0000", "0111", "0001", "1100"])
    idx = build_index(refs.codes, 2)
    q = make_query("0010")
    res = search_naive(q, idx, refs, 4, CandidateBudget.top(1))
    assert res.candidates_examined == idx.entry_size(0b00) == 2
    assert sorted(res.neighbor_ids.tolist()) == [0, 2]
    assert res.entries_probed == 1


def test_naive_empty_own_entry_probes_distance_one():
    # no reference code starts with 00; ranked order is 00, then 01 and 10
    refs = refs_from_strings(["0100", "0101", "1100"])
    idx = build_index(refs.codes, 2)
    q = make_query("0010")
    res = search_naive(q, idx, refs, 2, CandidateBudget.top(2))
    # entries probed: 0b00 (empty), then 0b01 -> ids {0, 1}
    assert sorted(res.neighbor_ids.tolist()) == [0, 1]
    assert res.candidates_examined == 2


def test_naive_scores_considered_is_table_size():
    refs = refs_from_strings(["0101", "1010"])
    idx = build_index(refs.codes, 3)
    res = search_naive(make_query("0101"), refs=refs, idx=idx, k=1,
                       budget=CandidateBudget.top(1))
    assert res.scores_considered == 2**3


def test_dnn_full_coverage_equals_exhaustive():
    rng = np.random.default_rng(22)
    mat = rng.integers(0, 2, size=(60, 10), dtype=np.uint8)
    refs = ReferenceDataset(codes=PackedCodes.from_bits(mat),
                            labels=[frozenset({0})] * 60)
    idx = build_index(refs.codes, 3)
    model = init_model(4, 3, seed=0)
    for _ in range(8):
        q = Query(features=rng.normal(size=4),
                  code=pack_code(rng.integers(0, 2, size=10).tolist()),
                  labels=frozenset())
        full = search_dnn(q, model, idx, refs, 5, CandidateBudget.top(2**3))
        exact = search_exhaustive(q, refs, 5)
        assert full.neighbors == exact.neighbors


def test_dnn_uniform_model_probes_entries_in_value_order():
    refs = refs_from_strings(["000", "010", "100", "110"])
    idx = build_index(refs.codes, 2)
    model = init_model(2, 2, seed=0)
    for w in (model.w1, model.w2, model.w3):
        w[:] = 0.0
    q = make_query("111", features=[1.0, -1.0])
    res = search_dnn(q, model, idx, refs, 4, CandidateBudget.top(2))
    # uniform scores tie-break ascending entry value: entries 0b00 then 0b01
    assert sorted(res.neighbor_ids.tolist()) == [0, 1]
    assert res.entries_probed == 2


def test_dnn_trained_model_finds_cluster_entry():
    """Two linearly separated clusters in two distinct entries; the trained
    ranker must put each query's own cluster entry first.  Four feature
    dims give the F-unit hidden layers enough width to escape the
    constant-prediction local optimum at every init seed."""
    rng = np.random.default_rng(23)
    n_per = 30
    codes = PackedCodes.from_bits(np.array(
        [[0, 0]] * n_per + [[1, 0]] * n_per, dtype=np.uint8))
    labels = [frozenset({0})] * n_per + [frozenset({1})] * n_per
    refs = ReferenceDataset(codes=codes, labels=labels)
    idx = build_index(codes, 1)

    q_feats = np.vstack([
        rng.normal(loc=2.0, scale=0.1, size=(20, 4)),
        rng.normal(loc=-2.0, scale=0.1, size=(20, 4)),
    ])
    q_labels = [frozenset({0})] * 20 + [frozenset({1})] * 20
    targets, kept = build_training_targets(q_labels, idx, labels)
    assert kept.size == 40

    model = init_model(4, 1, seed=1)
    train(model, q_feats, targets,
          TrainConfig(learning_rate=0.01, batch_size=8, epochs=100, seed=1))

    for cluster, feat_loc in ((0, 2.0), (1, -2.0)):
        q = Query(features=np.full(4, feat_loc),
                  code=codes.row(cluster * n_per),
                  labels=frozenset({cluster}))
        res = search_dnn(q, model, idx, refs, 5, CandidateBudget.top(1))
        # every retrieved point comes from the query's own cluster
        assert all(labels[i] == q.labels for i in res.neighbor_ids)
        assert res.candidates_examined == n_per


def test_dnn_model_index_dimension_mismatch():
    refs = refs_from_strings(["0000", "1111"])
    idx = build_index(refs.codes, 2)
    model = init_model(2, 3, seed=0)  # model expects 8 entries, index has 4
    with pytest.raises(ValueError):
        search_dnn(make_query("0000", features=[0.0, 0.0]), model, idx, refs, 1,
                   CandidateBudget.top(1))


def test_result_instrumentation_and_timings():
    rng = np.random.default_rng(24)
    mat = rng.integers(0, 2, size=(50, 16), dtype=np.uint8)
    refs = ReferenceDataset(codes=PackedCodes.from_bits(mat),
                            labels=[frozenset({0})] * 50)
    idx = build_index(refs.codes, 4)
    model = init_model(3, 4, seed=0)
    q = Query(features=rng.normal(size=3),
              code=pack_code(rng.integers(0, 2, size=16).tolist()),
              labels=frozenset())
    res = search_dnn(q, model, idx, refs, 5, CandidateBudget.count(10))
    assert res.scores_considered == 16
    assert res.candidates_examined >= 10
    assert res.entries_probed >= 1
    t = res.timings
    assert t.predict_ms >= 0 and t.rank_ms >= 0 and t.rerank_ms >= 0
    assert t.total_ms == t.predict_ms + t.rank_ms + t.rerank_ms
    nv = search_naive(q, idx, refs, 5, CandidateBudget.count(10))
    assert nv.timings.predict_ms == 0.0
    ex = search_exhaustive(q, refs, 5)
    assert ex.timings.predict_ms == 0.0 and ex.timings.rank_ms == 0.0


def test_rerank_tie_break_ascending_id():
    refs = refs_from_strings(["11", "11", "11"])
    res = search_exhaustive(make_query("11"), refs, 3)
    np.testing.assert_array_equal(res.neighbor_ids, [0, 1, 2])


def test_query_prefix_uses_own_code():
    # sanity: the naive ranking is anchored at the query's own index code
    refs = refs_from_strings(["0011", "1111"])
    idx = build_index(refs.codes, 2)
    q = make_query("1100")
    assert extract_index_code(q.code, 2) == 0b11
    res = search_naive(q, idx, refs, 1, CandidateBudget.top(1))
    assert res.neighbor_ids.tolist() == [1]
