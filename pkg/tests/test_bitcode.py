"""Bit-level primitives: packing, Hamming distance, index-code extraction."""

import numpy as np
import pytest

from hashprobe.bitcode import (
    BitCode,
    PackedCodes,
    extract_index_code,
    hamming_distance,
    hamming_to_all,
    pack_code,
    prefix_codes,
    unpack_code,
)


def bits(s):
    return [int(ch) for ch in s]


def test_hamming_identical():
    a = pack_code(bits("0000"))
    assert hamming_distance(a, a) == 0


def test_hamming_complement():
    a = pack_code(bits("1010"))
    b = pack_code(bits("0101"))
    assert hamming_distance(a, b) == 4


def test_hamming_eight_bit_pair():
    # positions 2 and 5 differ (first emitted bit = position 0)
    a = pack_code(bits("10110110"))
    b = pack_code(bits("10010111"))
    oracle = sum(x != y for x, y in zip(bits("10110110"), bits("10010111")))
    assert oracle == 2
    assert hamming_distance(a, b) == oracle


def test_hamming_length_mismatch():
    a = pack_code(bits("1010"))
    b = pack_code(bits("10100"))
    with pytest.raises(ValueError):
        hamming_distance(a, b)


def test_pack_unpack_round_trip():
    code = pack_code(bits("10110110"))
    assert unpack_code(code).tolist() == bits("10110110")
    assert code.length == 8


def test_pack_empty_rejected():
    with pytest.raises(ValueError):
        pack_code([])


def test_pack_non_binary_rejected():
    with pytest.raises(ValueError):
        pack_code([0, 1, 2])


def test_pack_max_length_all_ones():
    code = pack_code([1] * 512)
    assert int(unpack_code(code).sum()) == 512
    zero = pack_code([0] * 512)
    assert hamming_distance(code, zero) == 512


def test_pack_over_max_length_rejected():
    with pytest.raises(ValueError):
        pack_code([1] * 513)


def test_padding_bits_are_zero():
    code = pack_code(bits("111"))
    assert code.packed[0] >> 3 == 0


def test_extract_index_code_prefix():
    # first d emitted bits, first bit most significant
    assert extract_index_code(pack_code(bits("10110110")), 3) == 0b101
    assert extract_index_code(pack_code(bits("00000000")), 8) == 0
    assert extract_index_code(pack_code(bits("11111111")), 4) == 15


def test_extract_index_code_bad_d():
    code = pack_code(bits("10110110"))
    with pytest.raises(ValueError):
        extract_index_code(code, 0)
    with pytest.raises(ValueError):
        extract_index_code(code, 9)  # d > code length
    with pytest.raises(ValueError):
        extract_index_code(pack_code([1] * 32), 25)  # d > 24 cap


def test_packed_codes_round_trip():
    rng = np.random.default_rng(11)
    mat = rng.integers(0, 2, size=(40, 19), dtype=np.uint8)
    codes = PackedCodes.from_bits(mat)
    assert codes.length == 19
    assert codes.data.shape == (40, 3)
    np.testing.assert_array_equal(codes.unpack(), mat)
    # row view agrees with scalar packing
    for i in (0, 7, 39):
        assert codes.row(i) == pack_code(mat[i].tolist())


def test_packed_codes_padding_validated():
    data = np.full((2, 1), 0xFF, dtype=np.uint8)
    with pytest.raises(ValueError):
        PackedCodes(data=data, length=3)  # pad bits set


def test_hamming_to_all_matches_pairwise():
    rng = np.random.default_rng(5)
    mat = rng.integers(0, 2, size=(60, 33), dtype=np.uint8)
    codes = PackedCodes.from_bits(mat)
    q = codes.row(17)
    dists = hamming_to_all(q, codes)
    expect = [hamming_distance(q, codes.row(i)) for i in range(60)]
    np.testing.assert_array_equal(dists, expect)
    assert dists.dtype == np.int64


def test_prefix_codes_matches_scalar():
    rng = np.random.default_rng(9)
    mat = rng.integers(0, 2, size=(50, 21), dtype=np.uint8)
    codes = PackedCodes.from_bits(mat)
    for d in (1, 5, 8, 13, 21):
        vals = prefix_codes(codes, d)
        expect = [extract_index_code(codes.row(i), d) for i in range(50)]
        np.testing.assert_array_equal(vals, expect)


def test_hamming_metric_axioms_randomized():
    """Identity, symmetry, triangle inequality on random code pairs/triples."""
    rng = np.random.default_rng(123)
    for _ in range(300):
        c = int(rng.integers(1, 65))
        a = pack_code(rng.integers(0, 2, size=c).tolist())
        b = pack_code(rng.integers(0, 2, size=c).tolist())
        x = pack_code(rng.integers(0, 2, size=c).tolist())
        assert hamming_distance(a, a) == 0
        assert hamming_distance(a, b) == hamming_distance(b, a)
        assert hamming_distance(a, x) <= hamming_distance(a, b) + hamming_distance(b, x)
        if a != b:
            assert hamming_distance(a, b) > 0
