"""Data models for paired clips, occlusion patches and corruption plans."""

from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Rect(BaseModel):
    """Axis-aligned rectangle in frame coordinates."""

    model_config = ConfigDict(frozen=True)

    top: int = Field(ge=0)
    left: int = Field(ge=0)
    height: int = Field(ge=1)
    width: int = Field(ge=1)

    @classmethod
    def from_sequence(cls, values: Sequence[int]) -> "Rect":
        top, left, height, width = (int(v) for v in values)
        return cls(top=top, left=left, height=height, width=width)

    @property
    def bottom(self) -> int:
        return self.top + self.height

    @property
    def right(self) -> int:
        return self.left + self.width

    def dilate(self, dy: int, dx: int) -> "Rect":
        top = max(0, self.top - dy)
        left = max(0, self.left - dx)
        return Rect(
            top=top,
            left=left,
            height=self.bottom + dy - top,
            width=self.right + dx - left,
        )

    def fits_in(self, height: int, width: int) -> bool:
        return self.bottom <= height and self.right <= width


class VideoClip(BaseModel):
    """Lip-centred video x_v as a [T x H x W x C] array in [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    frames: np.ndarray = Field(description="Pixel values [T x H x W x C]")
    mouth_region: Rect = Field(description="Synthetic stand-in for lip landmarks")
    fps: int = Field(default=25, ge=1)

    @field_validator("frames")
    @classmethod
    def validate_frames(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 4 or v.shape[0] < 1:
            raise ValueError(f"frames must be [T x H x W x C] with T >= 1, got {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def validate_mouth(self):
        if not self.mouth_region.fits_in(self.height, self.width):
            raise ValueError("mouth_region must lie inside the frame")
        return self

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    def with_frames(self, frames: np.ndarray) -> "VideoClip":
        return VideoClip(frames=frames, mouth_region=self.mouth_region, fps=self.fps)


class AudioClip(BaseModel):
    """Speech waveform x_a."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    samples: np.ndarray = Field(description="Waveform [S]")
    sample_rate: int = Field(default=4000, ge=1)

    @field_validator("samples")
    @classmethod
    def validate_samples(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 1:
            raise ValueError(f"samples must be a non-empty 1D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        return v

    @property
    def num_samples(self) -> int:
        return int(self.samples.shape[0])

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples=samples, sample_rate=self.sample_rate)


class OcclusionPatch(BaseModel):
    """An alpha-blended occluder."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    patch_id: str
    pixels: np.ndarray = Field(description="[h x w x C] in [0, 1]")
    alpha: np.ndarray = Field(description="[h x w] in [0, 1]")

    @model_validator(mode="after")
    def validate_arrays(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.pixels.ndim != 3:
            raise ValueError("pixels must be [h x w x C]")
        if self.alpha.shape != self.pixels.shape[:2]:
            raise ValueError("alpha must be [h x w] matching pixels")
        if self.alpha.min() < 0.0 or self.alpha.max() > 1.0:
            raise ValueError("alpha values must lie in [0, 1]")
        return self

    @property
    def size(self) -> Tuple[int, int]:
        return int(self.pixels.shape[0]), int(self.pixels.shape[1])


class OcclusionSegment(BaseModel):
    start: int = Field(ge=0, description="First frame")
    end: int = Field(ge=0, description="One past the last frame")
    patch_id: str
    position: Tuple[int, int] = Field(description="Patch centre (row, col)")


class BlurSegment(BaseModel):
    start: int = Field(ge=0)
    end: int = Field(ge=0)
    sigma: float = Field(gt=0.0)


class PixelNoiseSegment(BaseModel):
    start: int = Field(ge=0)
    end: int = Field(ge=0)
    variance: float = Field(gt=0.0)


class AudioSegment(BaseModel):
    start: int = Field(ge=0, description="First sample")
    end: int = Field(ge=0, description="One past the last sample")
    noise_id: str
    snr_db: float


class CorruptionPlan(BaseModel):
    """Seed-derived schedule of which chunks of each stream get which corruption."""

    seed: int = Field(ge=0)
    num_frames: int = Field(ge=1)
    num_samples: int = Field(ge=1)
    occlusion_segments: List[OcclusionSegment] = Field(default_factory=list)
    blur_segments: List[BlurSegment] = Field(default_factory=list)
    pixelnoise_segments: List[PixelNoiseSegment] = Field(default_factory=list)
    audio_segments: List[AudioSegment] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_bounds(self):
        for seg in [*self.occlusion_segments, *self.blur_segments, *self.pixelnoise_segments]:
            if not 0 <= seg.start < seg.end <= self.num_frames:
                raise ValueError(f"frame segment [{seg.start},{seg.end}) outside [0,{self.num_frames})")
        for seg in self.audio_segments:
            if not 0 <= seg.start < seg.end <= self.num_samples:
                raise ValueError(f"sample segment [{seg.start},{seg.end}) outside [0,{self.num_samples})")
        spans = sorted((s.start, s.end) for s in self.occlusion_segments)
        for (_, prev_end), (start, _) in zip(spans, spans[1:]):
            if start < prev_end:
                raise ValueError("occlusion segments overlap")
        return self

    @property
    def is_empty(self) -> bool:
        return not (
            self.occlusion_segments or self.blur_segments
            or self.pixelnoise_segments or self.audio_segments
        )

    def visual_frame_mask(self) -> np.ndarray:
        """Boolean [T]: frame touched by any visual corruption."""
        mask = np.zeros(self.num_frames, dtype=bool)
        for seg in [*self.occlusion_segments, *self.blur_segments, *self.pixelnoise_segments]:
            mask[seg.start:seg.end] = True
        return mask

    def occlusion_frame_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_frames, dtype=bool)
        for seg in self.occlusion_segments:
            mask[seg.start:seg.end] = True
        return mask

    def audio_frame_mask(self, samples_per_frame: int) -> np.ndarray:
        """Boolean [T]: frame whose sample span overlaps any audio segment."""
        mask = np.zeros(self.num_frames, dtype=bool)
        for seg in self.audio_segments:
            first = seg.start // samples_per_frame
            last = (seg.end - 1) // samples_per_frame
            mask[first:min(last + 1, self.num_frames)] = True
        return mask
