"""Data models for evaluation grids and reports."""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field

from avrelscore.core.config import GRID_SNRS

VisualCondition = Literal["clean", "occlusion", "noise", "both"]
AudioMode = Literal["chunks", "full"]


class GridCondition(BaseModel):
    """One test corruption setting: visual corruption type x babble SNR."""

    visual: VisualCondition = "clean"
    snr: Optional[float] = Field(default=None, description="Babble SNR in dB; None for clean audio")
    audio_mode: AudioMode = "chunks"

    @property
    def snr_label(self) -> str:
        if self.snr is None:
            return "clean"
        return f"{self.snr:g}"

    @property
    def label(self) -> str:
        return f"{self.visual}/{self.snr_label}/{self.audio_mode}"


def default_conditions() -> List[GridCondition]:
    """Every visual type at clean audio and each grid SNR, plus whole-utterance babble on clean video."""
    conditions = []
    for visual in ("clean", "occlusion", "noise", "both"):
        conditions.append(GridCondition(visual=visual, snr=None))
        conditions.extend(GridCondition(visual=visual, snr=float(s)) for s in GRID_SNRS)
    conditions.extend(GridCondition(visual="clean", snr=float(s), audio_mode="full") for s in GRID_SNRS)
    return conditions


class ClipResult(BaseModel):
    """Decode outcome for one clip."""

    clip_id: str
    reference: List[str]
    hypothesis: List[str]
    combined: float
    score_att: float
    score_ctc: float
    score_lm: float
    reached_eos: bool
    s_a_mean: List[float] = Field(default_factory=list, description="Per-frame mean audio reliability")
    s_v_mean: List[float] = Field(default_factory=list, description="Per-frame mean visual reliability")


class EvalReport(BaseModel):
    model: str
    condition: GridCondition
    wer: float = Field(ge=0.0)
    n_utts: int = Field(ge=1)
    rows: List[ClipResult] = Field(default_factory=list)


class ReliabilityRow(BaseModel):
    clip_id: str
    frame: int
    s_a_mean: float
    s_v_mean: float
    audio_corrupted: bool
    visual_corrupted: bool


class ReliabilityContrast(BaseModel):
    """Mean scores over corrupted vs clean frames; NaN where a group is empty."""

    s_v_corrupted: float
    s_v_clean: float
    s_a_corrupted: float
    s_a_clean: float

    @property
    def visual_gap(self) -> float:
        return self.s_v_clean - self.s_v_corrupted

    @property
    def audio_gap(self) -> float:
        return self.s_a_clean - self.s_a_corrupted
