"""Packed binary hash codes, prefix extraction, and Hamming distance kernels.

Bit conventions used everywhere in this package:

* Bit position 0 is the first bit emitted by the hashing stage.  Position j
  is stored in byte j // 8 at in-byte offset j % 8, least significant bit
  first (numpy's ``bitorder="little"``).  Padding bits past position c-1 in
  the last byte are zero, so equality and XOR work bytewise.
* The d-bit index code is read as an integer whose most significant bit is
  position 0, so numerically adjacent index codes share long prefixes.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_CODE_LEN = 512
MAX_INDEX_BITS = 24


def _nbytes(length: int) -> int:
    return (length + 7) // 8


@dataclass(frozen=True)
class BitCode:
    """A single c-bit hash code, packed into bytes."""

    packed: bytes
    length: int

    def bits(self) -> np.ndarray:
        """Unpacked 0/1 digits, position 0 first."""
        raw = np.frombuffer(self.packed, dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.length]


def pack_code(bits: Iterable[int]) -> BitCode:
    """Pack a sequence of 0/1 digits into a BitCode.

    Raises ValueError for an empty sequence, a non-binary digit, or more
    than MAX_CODE_LEN digits.
    """
    arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("code must be a non-empty 1-D bit sequence")
    if arr.size > MAX_CODE_LEN:
        raise ValueError(f"code length {arr.size} exceeds {MAX_CODE_LEN}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("code digits must be 0 or 1")
    packed = np.packbits(arr.astype(np.uint8), bitorder="little")
    return BitCode(packed.tobytes(), int(arr.size))


def unpack_code(code: BitCode) -> np.ndarray:
    """Inverse of pack_code: the c unpacked digits."""
    return code.bits()


def hamming_distance(a: BitCode, b: BitCode) -> int:
    """Number of differing bit positions between two equal-length codes."""
    if a.length != b.length:
        raise ValueError(f"code length mismatch: {a.length} != {b.length}")
    x = int.from_bytes(a.packed, "little") ^ int.from_bytes(b.packed, "little")
    return x.bit_count()


def extract_index_code(code: BitCode, d: int) -> int:
    """Read the first d bits as an integer (position 0 is the MSB)."""
    if not 1 <= d <= min(code.length, MAX_INDEX_BITS):
        raise ValueError(
            f"d={d} out of range [1, {min(code.length, MAX_INDEX_BITS)}]"
        )
    value = 0
    for pos in range(d):
        bit = (code.packed[pos >> 3] >> (pos & 7)) & 1
        value = (value << 1) | bit
    return value


@dataclass
class PackedCodes:
    """n equal-length codes as an (n, ceil(c/8)) uint8 matrix."""

    data: np.ndarray
    length: int

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.dtype != np.uint8:
            raise ValueError("packed code matrix must be 2-D uint8")
        if not 1 <= self.length <= MAX_CODE_LEN:
            raise ValueError(f"code length {self.length} out of range")
        if self.data.shape[1] != _nbytes(self.length):
            raise ValueError(
                f"expected {_nbytes(self.length)} bytes per code, "
                f"got {self.data.shape[1]}"
            )
        pad = 8 * self.data.shape[1] - self.length
        if pad and (self.data[:, -1] >> (8 - pad)).any():
            raise ValueError("padding bits past the code length must be zero")

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "PackedCodes":
        """Pack an (n, c) 0/1 matrix."""
        bits = np.asarray(bits)
        if bits.ndim != 2 or bits.shape[1] == 0:
            raise ValueError("expected a non-empty (n, c) bit matrix")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("code digits must be 0 or 1")
        packed = np.packbits(bits.astype(np.uint8), axis=1, bitorder="little")
        return cls(packed, bits.shape[1])

    @classmethod
    def from_codes(cls, codes: Sequence[BitCode]) -> "PackedCodes":
        if len(codes) == 0:
            raise ValueError("empty code sequence")
        length = codes[0].length
        if any(c.length != length for c in codes):
            raise ValueError("all codes must share one length")
        data = np.frombuffer(b"".join(c.packed for c in codes), dtype=np.uint8)
        return cls(data.reshape(len(codes), _nbytes(length)).copy(), length)

    def __len__(self) -> int:
        return self.data.shape[0]

    def row(self, i: int) -> BitCode:
        return BitCode(self.data[i].tobytes(), self.length)

    def unpack(self) -> np.ndarray:
        """(n, c) matrix of 0/1 digits."""
        bits = np.unpackbits(self.data, axis=1, bitorder="little")
        return bits[:, : self.length]


def hamming_to_all(code: BitCode, codes: PackedCodes) -> np.ndarray:
    """Hamming distance from one code to every row of a packed matrix."""
    if code.length != codes.length:
        raise ValueError(f"code length mismatch: {code.length} != {codes.length}")
    row = np.frombuffer(code.packed, dtype=np.uint8)
    return np.bitwise_count(codes.data ^ row).sum(axis=1, dtype=np.int64)


def prefix_codes(codes: PackedCodes, d: int) -> np.ndarray:
    """Vectorized extract_index_code over every row; (n,) int64 values."""
    if not 1 <= d <= min(codes.length, MAX_INDEX_BITS):
        raise ValueError(
            f"d={d} out of range [1, {min(codes.length, MAX_INDEX_BITS)}]"
        )
    head = np.unpackbits(codes.data[:, : _nbytes(d)], axis=1, bitorder="little")
    weights = (np.int64(1) << np.arange(d - 1, -1, -1, dtype=np.int64))
    return head[:, :d].astype(np.int64) @ weights
