"""Chunk scheduler: seed -> CorruptionPlan.

A stream of length L is evenly divided by an occurrence number N drawn from
{1..max_occurrences}; inside each division a ratio t in [ratio_min, ratio_max]
picks the corrupted span length and its offset is drawn uniformly. Occlusion,
blur, pixel noise and audio each run the scheduler with independent draws.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from avrelscore.core.config import CorruptionConfig
from avrelscore.core.exceptions import CorruptionError, SizingError
from avrelscore.corruption.views import (
    AudioSegment,
    BlurSegment,
    CorruptionPlan,
    OcclusionSegment,
    PixelNoiseSegment,
    Rect,
)

logger = logging.getLogger(__name__)

_EPS = 1e-9


def patch_ids(cfg: CorruptionConfig) -> List[str]:
    return [f"patch-{i:02d}" for i in range(cfg.patch_bank_size)]


def noise_ids(cfg: CorruptionConfig) -> List[str]:
    return [f"babble-{i}" for i in range(cfg.noise_bank_size)]


def division_bounds(length: int, n: int) -> List[Tuple[int, int]]:
    """Even division of [0, length) into n contiguous parts."""
    edges = [(i * length) // n for i in range(n + 1)]
    return list(zip(edges[:-1], edges[1:]))


def span_limits(division: int, cfg: CorruptionConfig) -> Tuple[int, int]:
    """Integer span lengths whose fraction of ``division`` lies in [ratio_min, ratio_max]."""
    lo = max(1, math.ceil(cfg.ratio_min * division - _EPS))
    hi = math.floor(cfg.ratio_max * division + _EPS)
    return lo, hi


def validate_stream_length(length: int, cfg: CorruptionConfig, axis: str = "frames") -> None:
    """
    Reject streams too short for every division the scheduler could draw.

    Args:
        length: Stream length (frames or samples)
        cfg: Corruption config
        axis: Name used in the error message
    """
    if length < cfg.max_occurrences:
        raise SizingError(
            f"Stream of {length} {axis} is shorter than max_occurrences={cfg.max_occurrences}"
        )
    for n in range(1, cfg.max_occurrences + 1):
        for start, end in division_bounds(length, n):
            lo, hi = span_limits(end - start, cfg)
            if lo > hi:
                raise SizingError(
                    f"Stream of {length} {axis} cannot hold a chunk: division of {end - start} {axis} "
                    f"admits no span with ratio in [{cfg.ratio_min}, {cfg.ratio_max}] (N={n})"
                )


def schedule_chunks(rng: np.random.Generator, length: int, cfg: CorruptionConfig) -> List[Tuple[int, int]]:
    """
    Draw non-overlapping corrupted spans over [0, length).

    Args:
        rng: Generator owned by one corruption type
        length: Stream length
        cfg: Corruption config

    Returns:
        Sorted (start, end) spans, one per division
    """
    n = int(rng.integers(1, cfg.max_occurrences + 1))
    spans = []
    for start, end in division_bounds(length, n):
        division = end - start
        lo, hi = span_limits(division, cfg)
        t = rng.uniform(cfg.ratio_min, cfg.ratio_max)
        span = int(min(max(round(t * division), lo), hi))
        offset = int(rng.integers(0, division - span + 1))
        spans.append((start + offset, start + offset + span))
    return spans


def plan_corruption(
    seed: int,
    num_frames: int,
    num_samples: int,
    cfg: CorruptionConfig,
    mouth_region: Optional[Rect] = None,
    frame_size: Optional[Tuple[int, int]] = None,
) -> CorruptionPlan:
    """
    Build the corruption plan of one clip; a pure function of its arguments.

    Args:
        seed: 64-bit plan seed
        num_frames: Video length T
        num_samples: Audio length S
        cfg: Corruption config
        mouth_region: Region the occluder centre is drawn around
        frame_size: (H, W) used when mouth_region is not given

    Returns:
        CorruptionPlan
    """
    validate_stream_length(num_frames, cfg, "frames")
    if cfg.audio_span == "chunks":
        validate_stream_length(num_samples, cfg, "samples")
    if mouth_region is None:
        h, w = frame_size or (cfg.patch_size, cfg.patch_size)
        mouth_region = Rect(top=0, left=0, height=h, width=w)

    occ_rng, blur_rng, noise_rng, audio_rng = (
        np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(4)
    )
    ids = patch_ids(cfg)
    noises = noise_ids(cfg)

    occlusion: List[OcclusionSegment] = []
    if occ_rng.random() < cfg.p_occlusion:
        area = mouth_region.dilate(cfg.patch_size // 2, cfg.patch_size // 2)
        for start, end in schedule_chunks(occ_rng, num_frames, cfg):
            patch_id = ids[int(occ_rng.integers(0, len(ids)))]
            row = int(occ_rng.integers(area.top, area.bottom))
            col = int(occ_rng.integers(area.left, area.right))
            occlusion.append(OcclusionSegment(start=start, end=end, patch_id=patch_id, position=(row, col)))

    blur: List[BlurSegment] = []
    if blur_rng.random() < cfg.p_blur:
        for start, end in schedule_chunks(blur_rng, num_frames, cfg):
            sigma = float(blur_rng.uniform(cfg.sigma_min, cfg.sigma_max))
            blur.append(BlurSegment(start=start, end=end, sigma=sigma))

    pixel_noise: List[PixelNoiseSegment] = []
    if noise_rng.random() < cfg.p_noise:
        for start, end in schedule_chunks(noise_rng, num_frames, cfg):
            # uniform on (0, max_variance]
            variance = float(cfg.max_variance * (1.0 - noise_rng.random()))
            pixel_noise.append(PixelNoiseSegment(start=start, end=end, variance=variance))

    audio: List[AudioSegment] = []
    if audio_rng.random() < cfg.p_audio:
        spans = [(0, num_samples)] if cfg.audio_span == "full" else schedule_chunks(audio_rng, num_samples, cfg)
        for start, end in spans:
            noise_id = noises[int(audio_rng.integers(0, len(noises)))]
            snr = float(cfg.snr_set[int(audio_rng.integers(0, len(cfg.snr_set)))])
            audio.append(AudioSegment(start=start, end=end, noise_id=noise_id, snr_db=snr))

    return CorruptionPlan(
        seed=seed,
        num_frames=num_frames,
        num_samples=num_samples,
        occlusion_segments=occlusion,
        blur_segments=blur,
        pixelnoise_segments=pixel_noise,
        audio_segments=audio,
    )


def condition_config(
    base: CorruptionConfig,
    visual: str,
    snr: Optional[float],
    audio_span: str = "chunks",
) -> CorruptionConfig:
    """
    Forced-presence config for one evaluation grid cell.

    Args:
        base: Config supplying ratios, sigma/variance ranges and bank sizes
        visual: One of clean, occlusion, noise, both
        snr: Babble SNR in dB, or None for clean audio
        audio_span: chunks (audio-visual setting) or full (whole utterance)

    Returns:
        Config whose probabilities are 0 or 1
    """
    presence = {
        "clean": (0.0, 0.0, 0.0),
        "occlusion": (1.0, 0.0, 0.0),
        "noise": (0.0, 1.0, 1.0),
        "both": (1.0, 1.0, 1.0),
    }
    if visual not in presence:
        raise CorruptionError(f"Unknown visual condition '{visual}'")
    p_occ, p_blur, p_noise = presence[visual]
    update = {
        "p_occlusion": p_occ,
        "p_blur": p_blur,
        "p_noise": p_noise,
        "p_audio": 0.0 if snr is None else 1.0,
        "audio_span": audio_span,
    }
    if snr is not None:
        update["snr_set"] = [float(snr)]
    return base.model_copy(update=update)
