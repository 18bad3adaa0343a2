"""Synthetic two-modality dataset generator with a sign-random-projection
surrogate hasher.

Points sample one or more label clusters in a latent space; both modality
feature views are fixed random linear maps of the latent, and hash codes
come from signed projections of the latent, so same-label points land in
nearby index entries.  Query features use the text view, reference features
the image view, and both share the latent Hamming space.
"""

from dataclasses import dataclass

import numpy as np

from .bitcode import MAX_CODE_LEN, BitCode, PackedCodes
from .search import Query


@dataclass(frozen=True)
class SynthConfig:
    n_ref: int = 1000
    n_queries: int = 100
    n_labels: int = 5
    f_img: int = 32
    f_txt: int = 32
    latent_dim: int = 16
    code_len: int = 16
    sigma: float = 0.2
    label_multiplicity: int = 1
    seed: int = 0

    def __post_init__(self):
        positive = (
            self.n_ref, self.n_queries, self.n_labels, self.f_img, self.f_txt,
            self.latent_dim, self.code_len, self.label_multiplicity,
        )
        if any(v < 1 for v in positive):
            raise ValueError("all size parameters must be positive")
        if self.code_len > MAX_CODE_LEN:
            raise ValueError(f"code_len must be <= {MAX_CODE_LEN}")
        if self.n_labels < 2:
            raise ValueError("need at least 2 labels")
        if self.label_multiplicity > self.n_labels:
            raise ValueError("label_multiplicity cannot exceed n_labels")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass
class ReferenceDataset:
    codes: PackedCodes
    labels: list[frozenset]
    features: np.ndarray | None = None  # image-view features, unused downstream

    def __post_init__(self):
        if len(self.labels) != len(self.codes):
            raise ValueError("codes and labels must have equal length")


def surrogate_hash(latent: np.ndarray, planes: np.ndarray) -> BitCode:
    """bit j = 1 iff dot(latent, planes[j]) >= 0."""
    latent = np.asarray(latent, dtype=np.float64)
    if latent.ndim != 1 or planes.ndim != 2 or planes.shape[1] != latent.size:
        raise ValueError(
            f"latent dim {latent.shape} does not match planes {planes.shape}"
        )
    bits = (planes @ latent >= 0.0).astype(np.uint8)
    return PackedCodes.from_bits(bits[None, :]).row(0)


def _hash_all(latents: np.ndarray, planes: np.ndarray) -> PackedCodes:
    bits = (latents @ planes.T >= 0.0).astype(np.uint8)
    return PackedCodes.from_bits(bits)


def _sample_points(rng, n, centers, sigma, multiplicity):
    n_labels = centers.shape[0]
    if multiplicity == 1:
        picks = rng.integers(0, n_labels, size=(n, 1))
    else:
        picks = np.argsort(rng.random((n, n_labels)), axis=1)[:, :multiplicity]
    latents = centers[picks].mean(axis=1)
    latents += sigma * rng.standard_normal(latents.shape)
    labels = [frozenset(int(v) for v in row) for row in picks]
    return labels, latents


def generate(cfg: SynthConfig) -> tuple[ReferenceDataset, list[Query]]:
    """Seeded dataset plus query set; byte-identical given the same config.

    Draw order on the single generator stream: cluster centers, hash
    planes, image/text projections, then reference points, then queries.
    """
    rng = np.random.default_rng(cfg.seed)
    centers = rng.standard_normal((cfg.n_labels, cfg.latent_dim))
    planes = rng.standard_normal((cfg.code_len, cfg.latent_dim))
    proj_img = rng.standard_normal((cfg.f_img, cfg.latent_dim)) / np.sqrt(cfg.latent_dim)
    proj_txt = rng.standard_normal((cfg.f_txt, cfg.latent_dim)) / np.sqrt(cfg.latent_dim)

    ref_labels, ref_latents = _sample_points(
        rng, cfg.n_ref, centers, cfg.sigma, cfg.label_multiplicity
    )
    ref_feats = ref_latents @ proj_img.T
    ref_feats += cfg.sigma * rng.standard_normal(ref_feats.shape)
    refs = ReferenceDataset(
        codes=_hash_all(ref_latents, planes),
        labels=ref_labels,
        features=ref_feats.astype(np.float32),
    )

    q_labels, q_latents = _sample_points(
        rng, cfg.n_queries, centers, cfg.sigma, cfg.label_multiplicity
    )
    q_feats = q_latents @ proj_txt.T
    q_feats += cfg.sigma * rng.standard_normal(q_feats.shape)
    q_feats = q_feats.astype(np.float32)
    q_codes = _hash_all(q_latents, planes)
    queries = [
        Query(features=q_feats[j], code=q_codes.row(j), labels=q_labels[j])
        for j in range(cfg.n_queries)
    ]
    return refs, queries
