"""Shared fixtures: tiny configs and a handful of synthetic clips."""

from typing import List

import numpy as np
import pytest

from avrelscore.core.config import ConfigBundle, CorruptionConfig, ModelConfig, SyntheticSpec, TrainConfig
from avrelscore.data.synthetic import synthesize_clip
from avrelscore.training.diagnostics import tiny_model_config


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model_cfg() -> ModelConfig:
    return tiny_model_config(ModelConfig())


@pytest.fixture
def tiny_spec() -> SyntheticSpec:
    return SyntheticSpec(min_symbols=2, max_symbols=3)


@pytest.fixture
def tiny_bundle(tiny_model_cfg, tiny_spec) -> ConfigBundle:
    return ConfigBundle(
        corruption=CorruptionConfig(),
        model=tiny_model_cfg,
        train=TrainConfig(stage_frames=[8, 12], stage_epochs=[1, 1], batch_size=2, warmup_steps=2),
        synthetic=tiny_spec,
    )


@pytest.fixture
def clips(tiny_spec) -> List:
    """Two 8-frame and two 12-frame clips, so both curriculum stages are populated."""
    short = tiny_spec.model_copy(update={"max_symbols": 2})
    long = tiny_spec.model_copy(update={"min_symbols": 3})
    return [synthesize_clip(short, i, split="short") for i in range(2)] + [
        synthesize_clip(long, i, split="long") for i in range(2)
    ]
