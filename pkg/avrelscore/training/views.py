"""Data models for curriculum training."""

from pathlib import Path
from typing import List

from pydantic import BaseModel, Field, model_validator

from avrelscore.core.config import TrainConfig


class CurriculumStage(BaseModel):
    max_frames: int = Field(ge=1, description="Length cap in frames")
    epochs: int = Field(ge=1)


def stages_from_config(cfg: TrainConfig) -> List[CurriculumStage]:
    return [CurriculumStage(max_frames=f, epochs=e) for f, e in zip(cfg.stage_frames, cfg.stage_epochs)]


class MetricsRow(BaseModel):
    """One optimiser step of the metrics log."""

    step: int
    stage: int
    lr: float
    l_ctc: float
    l_att: float
    l_joint: float

    def as_row(self) -> list:
        return [self.step, self.stage, self.lr, self.l_ctc, self.l_att, self.l_joint]


METRICS_HEADER = ["step", "stage", "lr", "l_ctc", "l_att", "l_joint"]


class TrainResult(BaseModel):
    checkpoints: List[Path] = Field(default_factory=list)
    metrics_path: Path
    history: List[MetricsRow] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_checkpoints(self):
        if not self.checkpoints:
            raise ValueError("a training run produces at least one checkpoint")
        return self

    @property
    def final_checkpoint(self) -> Path:
        return self.checkpoints[-1]
