"""Modality front-ends mapping raw clips to [T x D] feature sequences."""

import logging
from typing import List

import numpy as np

from avrelscore.core.config import ModelConfig
from avrelscore.core.exceptions import ShapeError, SizingError
from avrelscore.corruption.views import AudioClip, VideoClip
from avrelscore.model.views import FeatureSequence
from avrelscore.tensor import Conv1d, Conv2d, Linear, Module, Tensor, ops

logger = logging.getLogger(__name__)


class VisualFrontend(Module):
    """
    Per-frame 2D convolution stack, global average pool, linear projection to D.

    Each conv has kernel 3, stride 2 and padding 1 followed by ReLU.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.height = cfg.frame_height
        self.width = cfg.frame_width
        self.convs: List[Conv2d] = []
        c_in = 1
        for i, c_out in enumerate(cfg.visual_channels):
            conv = Conv2d(c_in, c_out, 3, rng, stride=2, padding=1)
            setattr(self, f"conv{i}", conv)
            self.convs.append(conv)
            c_in = c_out
        self.proj = Linear(c_in, cfg.d_model, rng)

    def __call__(self, video: VideoClip) -> FeatureSequence:
        t, h, w, c = video.frames.shape
        if (h, w) != (self.height, self.width) or c != 1:
            raise ShapeError(
                "visual_frontend",
                [video.frames.shape],
                reason=f"expected grayscale {self.height}x{self.width} frames",
            )
        x = Tensor(video.frames.transpose(0, 3, 1, 2))
        for conv in self.convs:
            x = ops.relu(conv(x))
        n, ch, fh, fw = x.shape
        pooled = ops.mean(ops.reshape(x, shape=(n, ch, fh * fw)), axis=2)
        return FeatureSequence(values=self.proj(pooled), modality="visual")


def audio_kernel(stride: int) -> int:
    return stride + 2 * (stride // 2)


class AudioFrontend(Module):
    """
    Strided 1D convolution stack over the waveform, then linear projection to D.

    Layer i has stride s_i, kernel s_i + 2*(s_i // 2) and padding s_i // 2, so a
    length divisible by s_i maps to exactly length / s_i steps.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.samples_per_frame = cfg.samples_per_frame
        self.convs: List[Conv1d] = []
        c_in = 1
        for i, (c_out, stride) in enumerate(zip(cfg.audio_channels, cfg.audio_strides)):
            conv = Conv1d(c_in, c_out, audio_kernel(stride), rng, stride=stride, padding=stride // 2)
            setattr(self, f"conv{i}", conv)
            self.convs.append(conv)
            c_in = c_out
        self.proj = Linear(c_in, cfg.d_model, rng)

    def __call__(self, audio: AudioClip, target_frames: int) -> FeatureSequence:
        expected = target_frames * self.samples_per_frame
        if audio.num_samples != expected:
            raise SizingError(
                f"Audio of {audio.num_samples} samples cannot map to {target_frames} frames "
                f"({self.samples_per_frame} samples per frame); pad or trim the waveform to {expected} samples"
            )
        x = Tensor(audio.samples[:, None])
        for conv in self.convs:
            x = ops.relu(conv(x))
        return FeatureSequence(values=self.proj(x), modality="audio")
