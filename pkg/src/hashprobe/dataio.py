"""Readers and writers for the on-disk artifacts.

Binary formats are little-endian with a 4-byte magic and a u32 version:

* codes    "HPBC": version, N u64, c u32, then N records of ceil(c/8) bytes
           (bit position j in byte j//8 at in-byte offset j%8, LSB first,
           final byte zero-padded).
* features "HPFV": version, N u64, F u32, then row-major float32.
* index    "HPIX": version, d u32, N u64, then 2^d entry lengths (u32) and
           the concatenated ids (u32).

Labels are text, one line per point with space-separated label ids; an
empty line is an empty label set.  The manifest is key=value text tying the
split files together.  Every load validates magic, version, and size
arithmetic before anything is returned; model files live in `predictor`.
"""

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .bitcode import MAX_CODE_LEN, PackedCodes, _nbytes
from .datagen import ReferenceDataset
from .errors import FormatError
from .inverted_index import InvertedIndex
from .search import Query

CODES_MAGIC = b"HPBC"
FEATURES_MAGIC = b"HPFV"
INDEX_MAGIC = b"HPIX"
FORMAT_VERSION = 1

MANIFEST_KEYS = (
    "ref_codes", "ref_labels", "ref_features",
    "train_query_features", "train_query_codes", "train_query_labels",
    "eval_query_features", "eval_query_codes", "eval_query_labels",
)


def _check_header(buf: bytes, magic: bytes, path) -> None:
    if len(buf) < 8 or buf[:4] != magic:
        raise FormatError(f"{path}: bad magic, expected {magic!r} (offset 0)")
    version = struct.unpack_from("<I", buf, 4)[0]
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} (offset 4)")


def _check_body(buf: bytes, header_size: int, expected: int, path) -> None:
    actual = len(buf) - header_size
    if actual != expected:
        raise FormatError(
            f"{path}: body is {actual} bytes, expected {expected} "
            f"(offset {header_size})"
        )


def save_codes(path, codes: PackedCodes) -> None:
    with open(path, "wb") as fh:
        fh.write(CODES_MAGIC)
        fh.write(struct.pack("<IQI", FORMAT_VERSION, len(codes), codes.length))
        fh.write(np.ascontiguousarray(codes.data).tobytes())


def load_codes(path) -> PackedCodes:
    buf = Path(path).read_bytes()
    _check_header(buf, CODES_MAGIC, path)
    if len(buf) < 20:
        raise FormatError(f"{path}: truncated header, {len(buf)} of 20 bytes")
    n, c = struct.unpack_from("<QI", buf, 8)
    if not 1 <= c <= MAX_CODE_LEN:
        raise FormatError(f"{path}: code length {c} out of range (offset 16)")
    _check_body(buf, 20, n * _nbytes(c), path)
    data = np.frombuffer(buf, dtype=np.uint8, offset=20).reshape(n, _nbytes(c))
    try:
        return PackedCodes(data.copy(), c)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_features(path, features: np.ndarray) -> None:
    features = np.asarray(features, dtype=np.float32)
    if features.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    with open(path, "wb") as fh:
        fh.write(FEATURES_MAGIC)
        fh.write(struct.pack("<IQI", FORMAT_VERSION, *features.shape))
        fh.write(np.ascontiguousarray(features, dtype="<f4").tobytes())


def load_features(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    _check_header(buf, FEATURES_MAGIC, path)
    if len(buf) < 20:
        raise FormatError(f"{path}: truncated header, {len(buf)} of 20 bytes")
    n, f = struct.unpack_from("<QI", buf, 8)
    if f < 1:
        raise FormatError(f"{path}: feature dim must be positive (offset 16)")
    _check_body(buf, 20, n * f * 4, path)
    flat = np.frombuffer(buf, dtype="<f4", offset=20)
    return flat.reshape(n, f).astype(np.float32)


def save_labels(path, labels: Sequence[frozenset]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ls in labels:
            fh.write(" ".join(str(v) for v in sorted(ls)))
            fh.write("\n")


def load_labels(path) -> list[frozenset]:
    text = Path(path).read_text(encoding="utf-8")
    labels = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-integer label id") from exc
        if any(v < 0 for v in values):
            raise FormatError(f"{path}:{lineno}: negative label id")
        labels.append(frozenset(values))
    return labels


def save_index(path, idx: InvertedIndex) -> None:
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<IIQ", FORMAT_VERSION, idx.d, idx.n))
        fh.write(idx.entry_sizes().astype("<u4").tobytes())
        fh.write(idx.ids.astype("<u4").tobytes())


def load_index(path) -> InvertedIndex:
    buf = Path(path).read_bytes()
    _check_header(buf, INDEX_MAGIC, path)
    if len(buf) < 20:
        raise FormatError(f"{path}: truncated header, {len(buf)} of 20 bytes")
    d, n = struct.unpack_from("<IQ", buf, 8)
    if not 1 <= d <= 24:
        raise FormatError(f"{path}: index width d={d} out of range (offset 8)")
    n_entries = 1 << d
    _check_body(buf, 20, 4 * (n_entries + n), path)
    lengths = np.frombuffer(buf, dtype="<u4", offset=20, count=n_entries)
    ids = np.frombuffer(buf, dtype="<u4", offset=20 + 4 * n_entries)
    if int(lengths.sum()) != n:
        raise FormatError(
            f"{path}: entry lengths sum to {int(lengths.sum())}, header says {n}"
        )
    offsets = np.zeros(n_entries + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    if n:
        if ids.max() >= n or np.bincount(ids, minlength=n).max() > 1:
            raise FormatError(f"{path}: ids do not form a partition of 0..{n - 1}")
        inner = np.diff(ids.astype(np.int64))
        boundaries = offsets[1:-1] - 1  # last slot of each non-final entry
        inner_mask = np.ones(n - 1, dtype=bool)
        inner_mask[boundaries[boundaries < n - 1]] = False
        if (inner[inner_mask] <= 0).any():
            raise FormatError(f"{path}: posting lists are not strictly ascending")
    return InvertedIndex(d=d, offsets=offsets, ids=ids.astype(np.uint32))


def save_manifest(path, entries: dict) -> None:
    # canonical key order keeps seeded re-runs byte-identical
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(entries):
            fh.write(f"{key}={entries[key]}\n")


def load_manifest(path) -> dict:
    entries = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def save_dataset(
    out_dir,
    refs: ReferenceDataset,
    train_queries: Sequence[Query],
    eval_queries: Sequence[Query],
    extra: dict | None = None,
) -> Path:
    """Write all split files plus the manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def write_split(prefix: str, queries: Sequence[Query]):
        feats = np.stack([q.features for q in queries]).astype(np.float32)
        codes = PackedCodes.from_codes([q.code for q in queries])
        save_features(out / f"{prefix}_features.hpfv", feats)
        save_codes(out / f"{prefix}_codes.hpbc", codes)
        save_labels(out / f"{prefix}_labels.txt", [q.labels for q in queries])

    if refs.features is None:
        raise ValueError("reference dataset has no feature matrix to persist")
    save_codes(out / "ref_codes.hpbc", refs.codes)
    save_labels(out / "ref_labels.txt", refs.labels)
    save_features(out / "ref_features.hpfv", refs.features.astype(np.float32))
    write_split("train_query", train_queries)
    write_split("eval_query", eval_queries)

    entries = {
        "format_version": FORMAT_VERSION,
        "c": refs.codes.length,
        "feature_dim": train_queries[0].features.size,
        "n_ref": len(refs.codes),
        "n_train_queries": len(train_queries),
        "n_eval_queries": len(eval_queries),
        "ref_codes": "ref_codes.hpbc",
        "ref_labels": "ref_labels.txt",
        "ref_features": "ref_features.hpfv",
        "train_query_features": "train_query_features.hpfv",
        "train_query_codes": "train_query_codes.hpbc",
        "train_query_labels": "train_query_labels.txt",
        "eval_query_features": "eval_query_features.hpfv",
        "eval_query_codes": "eval_query_codes.hpbc",
        "eval_query_labels": "eval_query_labels.txt",
    }
    if extra:
        entries.update(extra)
    manifest_path = out / "manifest.txt"
    save_manifest(manifest_path, entries)
    return manifest_path


def load_dataset(manifest_path):
    """Load every split named by a manifest, cross-validating N, c, and F.

    Returns (refs, train_queries, eval_queries, manifest_entries).
    """
    manifest_path = Path(manifest_path)
    entries = load_manifest(manifest_path)
    missing = [k for k in MANIFEST_KEYS if k not in entries]
    if missing:
        raise FormatError(f"{manifest_path}: missing manifest keys {missing}")
    base = manifest_path.parent

    def resolve(key: str) -> Path:
        p = Path(entries[key])
        return p if p.is_absolute() else base / p

    ref_codes = load_codes(resolve("ref_codes"))
    ref_labels = load_labels(resolve("ref_labels"))
    ref_features = load_features(resolve("ref_features"))
    if not len(ref_labels) == len(ref_codes) == len(ref_features):
        raise FormatError(
            f"{manifest_path}: reference split sizes disagree "
            f"({len(ref_codes)} codes, {len(ref_labels)} label lines in "
            f"ref_labels, {len(ref_features)} feature rows)"
        )

    def load_split(prefix: str) -> list[Query]:
        feats = load_features(resolve(f"{prefix}_features"))
        codes = load_codes(resolve(f"{prefix}_codes"))
        labels = load_labels(resolve(f"{prefix}_labels"))
        if not len(feats) == len(codes) == len(labels):
            raise FormatError(
                f"{manifest_path}: {prefix} split sizes disagree "
                f"({len(feats)} features, {len(codes)} codes, {len(labels)} labels)"
            )
        if codes.length != ref_codes.length:
            raise FormatError(
                f"{manifest_path}: {prefix} code length {codes.length} "
                f"!= reference length {ref_codes.length}"
            )
        return [
            Query(features=feats[j], code=codes.row(j), labels=labels[j])
            for j in range(len(codes))
        ]

    train_queries = load_split("train_query")
    eval_queries = load_split("eval_query")
    if train_queries and eval_queries:
        if train_queries[0].features.size != eval_queries[0].features.size:
            raise FormatError(
                f"{manifest_path}: train/eval feature dims disagree"
            )
    for key, count in (
        ("n_ref", len(ref_codes)),
        ("n_train_queries", len(train_queries)),
        ("n_eval_queries", len(eval_queries)),
    ):
        if key in entries and int(entries[key]) != count:
            raise FormatError(
                f"{manifest_path}: {key}={entries[key]} but files hold {count}"
            )
    refs = ReferenceDataset(codes=ref_codes, labels=ref_labels,
                            features=ref_features)
    return refs, train_queries, eval_queries, entries
