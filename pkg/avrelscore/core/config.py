"""Configuration management for the avrelscore toolkit.

Every config family is a pydantic model whose defaults are the desk-scale
values. Families are loaded from plain-text ``key = value`` files; one file may
carry keys for several families, and each family picks the keys it declares.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Type, TypeVar, get_args, get_origin

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from avrelscore.core.exceptions import ConfigError

# Load environment variables from .env file
load_dotenv()

TOOL_NAME = "avrelscore"
TOOL_VERSION = "1.0.0"
ENV_PREFIX = "AVREL_"

# Babble SNR columns of the evaluation grid, in dB
GRID_SNRS: Tuple[int, ...] = (15, 10, 5, 0, -5)

C = TypeVar("C", bound="KVConfig")


class KVConfig(BaseModel):
    """Base for config families loadable from key-value text."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid", frozen=True)

    @classmethod
    def keys(cls) -> List[str]:
        """Keys this family accepts (aliases where declared)."""
        return [f.alias or name for name, f in cls.model_fields.items()]

    @classmethod
    def from_kv(cls: Type[C], values: Mapping[str, str], base: Optional[C] = None) -> C:
        """
        Build the family from string values, ignoring keys it does not declare.

        Args:
            values: Raw key/value strings (already merged by precedence)
            base: Existing instance whose values act as defaults

        Returns:
            Validated config instance
        """
        data: Dict[str, Any] = base.model_dump(by_alias=True) if base is not None else {}
        for name, field in cls.model_fields.items():
            key = field.alias or name
            if key not in values:
                continue
            raw = values[key]
            if isinstance(raw, str) and _is_sequence(field.annotation):
                data[key] = [item.strip() for item in raw.split(",") if item.strip()]
            else:
                data[key] = raw
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            key = str(first["loc"][0]) if first.get("loc") else cls.__name__
            raise ConfigError(key, f"Invalid value for '{key}': {first['msg']}") from e


def _is_sequence(annotation: Any) -> bool:
    origin = get_origin(annotation)
    if origin in (list, tuple, List, Tuple):
        return True
    # Optional[List[...]]
    return any(get_origin(arg) in (list, tuple) for arg in get_args(annotation))


class CorruptionConfig(KVConfig):
    """Audio-visual corruption modeling parameters."""

    max_occurrences: int = Field(default=3, ge=1, description="Maximum occurrence number N")
    ratio_min: float = Field(default=0.3, gt=0.0, lt=1.0, description="Lower bound of the corrupted ratio t")
    ratio_max: float = Field(default=0.5, gt=0.0, lt=1.0, description="Upper bound of the corrupted ratio t")
    p_occlusion: float = Field(default=0.8, ge=0.0, le=1.0, description="Per-clip occlusion probability")
    p_blur: float = Field(default=0.3, ge=0.0, le=1.0, description="Per-clip blur probability")
    p_noise: float = Field(default=0.3, ge=0.0, le=1.0, description="Per-clip additive pixel noise probability")
    p_audio: float = Field(default=1.0, ge=0.0, le=1.0, description="Per-clip babble corruption probability")
    sigma_min: float = Field(default=0.1, ge=0.1, le=2.0, description="Minimum blur sigma")
    sigma_max: float = Field(default=2.0, ge=0.1, le=2.0, description="Maximum blur sigma")
    max_variance: float = Field(default=0.2, gt=0.0, le=0.2, description="Maximum pixel noise variance")
    snr_set: List[float] = Field(
        default_factory=lambda: [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        min_length=1,
        description="Babble SNRs in dB sampled per audio segment"
    )
    audio_span: Literal["chunks", "full"] = Field(
        default="chunks",
        description="Corrupt random audio chunks or the whole utterance"
    )
    patch_size: int = Field(default=10, ge=1, description="Nominal occlusion patch side in pixels")
    patch_bank_size: int = Field(default=12, ge=1, description="Number of procedurally generated patches")
    noise_bank_size: int = Field(default=4, ge=1, description="Number of babble waveforms in the noise bank")

    @model_validator(mode="after")
    def validate_ranges(self):
        if self.ratio_min > self.ratio_max:
            raise ValueError("ratio_min must not exceed ratio_max")
        if self.sigma_min > self.sigma_max:
            raise ValueError("sigma_min must not exceed sigma_max")
        return self


class ModelConfig(KVConfig):
    """Architecture hyperparameters of the reliability-scoring AVSR network."""

    d_model: int = Field(default=64, ge=1, description="Model dimension D")
    ff_dim: int = Field(default=128, ge=1, description="Feed-forward dimension")
    enc_layers: int = Field(default=3, ge=1, description="Conformer encoder blocks")
    dec_layers: int = Field(default=2, ge=1, description="Transformer decoder blocks")
    heads: int = Field(default=4, ge=1, description="Attention heads")
    conv_kernel: int = Field(default=7, ge=1, description="Conformer depthwise convolution width")
    vocab_size: int = Field(default=8, ge=1, description="Number of word symbols")
    frame_height: int = Field(default=32, ge=4, description="Video frame height")
    frame_width: int = Field(default=32, ge=4, description="Video frame width")
    samples_per_frame: int = Field(default=160, ge=1, description="Audio samples per video frame")
    visual_channels: List[int] = Field(default_factory=lambda: [8, 16, 16], min_length=1)
    audio_channels: List[int] = Field(default_factory=lambda: [16, 32, 32], min_length=1)
    audio_strides: List[int] = Field(default_factory=lambda: [4, 4, 10], min_length=1)
    score_kernel: int = Field(default=3, ge=1, description="Reliability scorer convolution width")
    rel_pos_max: int = Field(default=16, ge=1, description="Clipping distance of relative positions")
    fusion: Literal["relscore", "attention", "linear"] = Field(
        default="relscore",
        description="relscore: scoring+attentive fusion; attention: no scoring; linear: baseline"
    )
    modality: Literal["av", "audio", "visual"] = Field(default="av", description="Streams fed to the network")

    @model_validator(mode="after")
    def validate_shapes(self):
        if self.d_model % self.heads != 0:
            raise ValueError("d_model must be divisible by heads")
        if self.conv_kernel % 2 == 0:
            raise ValueError("conv_kernel must be odd")
        if self.score_kernel % 2 == 0:
            raise ValueError("score_kernel must be odd")
        if len(self.audio_channels) != len(self.audio_strides):
            raise ValueError("audio_channels and audio_strides must have equal length")
        stride = 1
        for s in self.audio_strides:
            stride *= s
        if stride != self.samples_per_frame:
            raise ValueError(
                f"audio_strides multiply to {stride}, expected samples_per_frame={self.samples_per_frame}"
            )
        return self


class TrainConfig(KVConfig):
    """Optimisation and curriculum settings."""

    lambda_: float = Field(default=0.9, alias="lambda", ge=0.0, le=1.0, description="Attention loss weight")
    peak_lr: float = Field(default=4e-4, gt=0.0, description="Peak learning rate")
    warmup_steps: int = Field(default=500, ge=1, description="Linear warmup steps")
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.98, gt=0.0, lt=1.0)
    epsilon: float = Field(default=1e-9, gt=0.0)
    stage_frames: List[int] = Field(default_factory=lambda: [10, 20, 40], min_length=1)
    stage_epochs: List[int] = Field(default_factory=lambda: [5, 5, 5], min_length=1)
    batch_size: int = Field(default=8, ge=1)
    grad_clip: float = Field(default=5.0, gt=0.0, description="Global gradient norm clip")
    seed: int = Field(default=0, ge=0)
    corrupt_training: bool = Field(default=True, description="Apply on-the-fly corruption")

    @model_validator(mode="after")
    def validate_stages(self):
        if len(self.stage_frames) != len(self.stage_epochs):
            raise ValueError("stage_frames and stage_epochs must have equal length")
        if any(b <= a for a, b in zip(self.stage_frames, self.stage_frames[1:])):
            raise ValueError("stage_frames must be strictly increasing")
        return self


class DecodeConfig(KVConfig):
    """Joint CTC/attention beam search with n-gram shallow fusion."""

    beam_width: int = Field(default=10, ge=1)
    alpha: float = Field(default=0.9, ge=0.0, le=1.0, description="Attention weight; CTC gets 1-alpha")
    beta: float = Field(default=0.5, ge=0.0, description="Language model weight")
    max_len: int = Field(default=12, ge=1, description="Maximum output tokens before eos")
    normalize_by_length: bool = Field(default=False)
    lm_order: int = Field(default=3, ge=1)
    lm_add_k: float = Field(default=0.1, gt=0.0)


class SyntheticSpec(KVConfig):
    """Synthetic paired audio-visual corpus definition."""

    vocab_size: int = Field(default=8, ge=1, le=16)
    frames_per_symbol: int = Field(default=4, ge=2)
    sample_rate: int = Field(default=4000, ge=1)
    fps: int = Field(default=25, ge=1)
    min_symbols: int = Field(default=2, ge=1)
    max_symbols: int = Field(default=10, ge=1)
    frame_height: int = Field(default=32, ge=4)
    frame_width: int = Field(default=32, ge=4)
    mouth_region: List[int] = Field(
        default_factory=lambda: [16, 8, 12, 16],
        min_length=4,
        max_length=4,
        description="top, left, height, width"
    )
    jitter: float = Field(default=0.02, ge=0.0, lt=0.2, description="Relative tone frequency jitter")
    babble_voices: int = Field(default=5, ge=3)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_geometry(self):
        if self.sample_rate % self.fps != 0:
            raise ValueError("sample_rate must be a multiple of fps")
        if self.min_symbols > self.max_symbols:
            raise ValueError("min_symbols must not exceed max_symbols")
        top, left, height, width = self.mouth_region
        if top < 0 or left < 0 or height < 1 or width < 1:
            raise ValueError("mouth_region must be a non-empty rectangle")
        if top + height > self.frame_height or left + width > self.frame_width:
            raise ValueError("mouth_region must lie inside the frame")
        return self

    @property
    def samples_per_frame(self) -> int:
        return self.sample_rate // self.fps

    @property
    def max_frames(self) -> int:
        return self.max_symbols * self.frames_per_symbol


class RunConfig(BaseModel):
    """Top-level run settings shared by every subcommand."""

    subcommand: str = Field(default="", description="CLI subcommand")
    config_paths: List[str] = Field(default_factory=list)
    seed: int = Field(default=0, ge=0)
    out_dir: str = Field(default="./runs")
    workers: int = Field(default=1, ge=1)
    log_level: str = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)
    json_logs: bool = Field(default=False)

    @classmethod
    def from_env(cls) -> "RunConfig":
        """Create run settings from environment variables."""
        variables = {
            "workers": "AVREL_THREADS",
            "log_level": "AVREL_LOG_LEVEL",
            "log_file": "AVREL_LOG_FILE",
            "json_logs": "AVREL_JSON_LOGS",
        }
        data = {field: os.environ[var] for field, var in variables.items() if var in os.environ}
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            var = variables[str(first["loc"][0])]
            raise ConfigError(var, f"Invalid value for {var}: {first['msg']}") from e

    def ensure_out_dir(self) -> Path:
        """Create the output directory and return it."""
        path = Path(self.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path


FAMILIES: Tuple[Type[KVConfig], ...] = (
    CorruptionConfig,
    ModelConfig,
    TrainConfig,
    DecodeConfig,
    SyntheticSpec,
)


def load_kv_file(path: str) -> Dict[str, str]:
    """
    Parse a ``key = value`` file.

    Args:
        path: File to read

    Returns:
        Mapping of keys to raw string values
    """
    values: Dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, f"{path}:{lineno}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def known_keys() -> set:
    keys = set()
    for family in FAMILIES:
        keys.update(family.keys())
    return keys


def env_values(prefix: str = ENV_PREFIX) -> Dict[str, str]:
    """Config-family keys set as ``AVREL_<KEY>`` environment variables."""
    values = {}
    for key in known_keys():
        raw = os.getenv(prefix + key.upper())
        if raw is not None:
            values[key] = raw
    return values


class ConfigBundle(BaseModel):
    """All config families resolved for one run."""

    corruption: CorruptionConfig = Field(default_factory=CorruptionConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    decode: DecodeConfig = Field(default_factory=DecodeConfig)
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)

    @classmethod
    def load(
        cls,
        paths: Iterable[str] = (),
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "ConfigBundle":
        """
        Resolve every family: defaults < AVREL_* environment < files (in order) < overrides.

        Args:
            paths: Key-value config files
            overrides: Values from command-line flags (None entries are skipped)

        Returns:
            Resolved bundle
        """
        merged: Dict[str, str] = env_values()
        for path in paths:
            merged.update(load_kv_file(path))
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            merged[key] = str(value)

        allowed = known_keys()
        for key in merged:
            if key not in allowed:
                raise ConfigError(key, f"Unknown configuration key: '{key}'")

        bundle = cls(
            corruption=CorruptionConfig.from_kv(merged),
            model=ModelConfig.from_kv(merged),
            train=TrainConfig.from_kv(merged),
            decode=DecodeConfig.from_kv(merged),
            synthetic=SyntheticSpec.from_kv(merged),
        )
        bundle.check_consistency()
        return bundle

    def check_consistency(self) -> None:
        """Cross-family checks between the corpus and the network."""
        if self.model.vocab_size != self.synthetic.vocab_size:
            raise ConfigError("vocab_size", "vocab_size differs between model and corpus")
        if self.model.samples_per_frame != self.synthetic.samples_per_frame:
            raise ConfigError(
                "samples_per_frame",
                f"samples_per_frame={self.model.samples_per_frame} but corpus has "
                f"{self.synthetic.samples_per_frame} (sample_rate/fps)"
            )
        if (self.model.frame_height, self.model.frame_width) != (
            self.synthetic.frame_height, self.synthetic.frame_width
        ):
            raise ConfigError("frame_height", "frame size differs between model and corpus")


def config_hash(*models: BaseModel) -> str:
    """
    Stable short hash over config models.

    Args:
        *models: Pydantic models to fingerprint

    Returns:
        First 16 hex digits of a SHA-256 over canonical JSON
    """
    payload = [
        {"family": type(m).__name__, "values": m.model_dump(mode="json", by_alias=True)}
        for m in models
    ]
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
