"""Data models for the synthetic corpus and its manifest."""

from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from avrelscore.corruption.views import AudioClip, VideoClip


class ManifestEntry(BaseModel):
    """One paired clip; paths are relative to the manifest directory."""

    clip_id: str
    video_path: str
    audio_path: str
    transcript: List[str] = Field(min_length=1, description="Word symbols")
    num_frames: int = Field(ge=1, description="T")
    num_samples: int = Field(ge=1, description="S")
    fps: int = Field(default=25, ge=1)
    sample_rate: int = Field(default=4000, ge=1)
    mouth_region: List[int] = Field(min_length=4, max_length=4, description="top, left, height, width")

    @model_validator(mode="after")
    def validate_pairing(self):
        if self.num_samples * self.fps != self.sample_rate * self.num_frames:
            raise ValueError(
                f"S={self.num_samples} is not paired with T={self.num_frames} at "
                f"{self.sample_rate} Hz / {self.fps} fps"
            )
        return self


class Manifest(BaseModel):
    entries: List[ManifestEntry] = Field(default_factory=list)

    def clip_ids(self) -> List[str]:
        return [e.clip_id for e in self.entries]

    def by_id(self, clip_id: str) -> ManifestEntry:
        for entry in self.entries:
            if entry.clip_id == clip_id:
                return entry
        raise KeyError(clip_id)

    def filter_max_frames(self, max_frames: int) -> "Manifest":
        return Manifest(entries=[e for e in self.entries if e.num_frames <= max_frames])


class SyntheticClip(BaseModel):
    """A generated clip held in memory."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    clip_id: str
    video: VideoClip
    audio: AudioClip
    transcript: List[str]
