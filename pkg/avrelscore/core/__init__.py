"""Core toolkit components - configuration, logging, artifacts and exceptions."""

from avrelscore.core.config import (
    ConfigBundle,
    CorruptionConfig,
    DecodeConfig,
    ModelConfig,
    RunConfig,
    SyntheticSpec,
    TrainConfig,
    config_hash,
    load_kv_file,
)
from avrelscore.core.exceptions import (
    AVRelScoreError,
    BankLookupError,
    ConfigError,
    CorruptionError,
    DatasetError,
    GradientError,
    InfeasibleAlignmentError,
    MediaFormatError,
    ShapeError,
    SizingError,
    VocabularyError,
)
from avrelscore.core.logging import setup_logging, get_logger
from avrelscore.core.artifacts import derive_seed, write_metadata

__all__ = [
    "ConfigBundle",
    "CorruptionConfig",
    "DecodeConfig",
    "ModelConfig",
    "RunConfig",
    "SyntheticSpec",
    "TrainConfig",
    "config_hash",
    "load_kv_file",
    "AVRelScoreError",
    "BankLookupError",
    "ConfigError",
    "CorruptionError",
    "DatasetError",
    "GradientError",
    "InfeasibleAlignmentError",
    "MediaFormatError",
    "ShapeError",
    "SizingError",
    "VocabularyError",
    "setup_logging",
    "get_logger",
    "derive_seed",
    "write_metadata",
]
