"""Inverted-index nearest-neighbor search over binary hash codes.

The package indexes reference hash codes by their d-bit prefix, trains a
small dense network that ranks index entries per query, and reranks the
gathered candidates by full-code Hamming distance.
"""

from .bitcode import (
    BitCode,
    PackedCodes,
    extract_index_code,
    hamming_distance,
    hamming_to_all,
    pack_code,
    prefix_codes,
    unpack_code,
)
from .datagen import ReferenceDataset, SynthConfig, generate
from .errors import DegenerateTargetError, FormatError, TrainingDivergedError
from .evaluation import (
    ExperimentConfig,
    EvalReport,
    MethodReport,
    ard_percent,
    average_precision_at_r,
    map_at_r,
    run_experiment,
    write_report_csv,
)
from .inverted_index import CandidateBudget, InvertedIndex, build_index, probe_entries
from .predictor import (
    PredictorModel,
    TrainConfig,
    forward,
    gradient_check,
    init_model,
    load_model,
    loss,
    save_model,
    train,
)
from .relevance import build_training_targets, compute_targets, is_relevant
from .search import (
    Query,
    SearchResult,
    Timings,
    search_dnn,
    search_exhaustive,
    search_naive,
)

__version__ = "0.1.0"

__all__ = [
    "BitCode",
    "CandidateBudget",
    "DegenerateTargetError",
    "EvalReport",
    "ExperimentConfig",
    "FormatError",
    "InvertedIndex",
    "MethodReport",
    "PackedCodes",
    "PredictorModel",
    "Query",
    "ReferenceDataset",
    "SearchResult",
    "SynthConfig",
    "Timings",
    "TrainConfig",
    "TrainingDivergedError",
    "ard_percent",
    "average_precision_at_r",
    "build_index",
    "build_training_targets",
    "compute_targets",
    "extract_index_code",
    "forward",
    "generate",
    "gradient_check",
    "hamming_distance",
    "hamming_to_all",
    "init_model",
    "is_relevant",
    "load_model",
    "loss",
    "map_at_r",
    "pack_code",
    "prefix_codes",
    "probe_entries",
    "run_experiment",
    "save_model",
    "search_dnn",
    "search_exhaustive",
    "search_naive",
    "train",
    "unpack_code",
    "write_report_csv",
]
