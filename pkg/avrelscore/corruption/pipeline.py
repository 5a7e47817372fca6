"""Apply a CorruptionPlan to a paired clip."""

import logging
from typing import Mapping, Tuple

import numpy as np

from avrelscore.core.exceptions import BankLookupError, SizingError
from avrelscore.corruption.audio import mix_at_snr
from avrelscore.corruption.views import AudioClip, CorruptionPlan, OcclusionPatch, VideoClip
from avrelscore.corruption.visual import add_pixel_noise, apply_occlusion, gaussian_blur

logger = logging.getLogger(__name__)

NoiseBank = Mapping[str, np.ndarray]
PatchBank = Mapping[str, OcclusionPatch]


def _lookup(bank: Mapping, kind: str, key: str):
    if key not in bank:
        raise BankLookupError(kind, key)
    return bank[key]


def _noise_for_span(noise: np.ndarray, length: int) -> np.ndarray:
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape[0] >= length:
        return noise[:length]
    return np.resize(noise, length)


def corrupt_pair(
    video: VideoClip,
    audio: AudioClip,
    plan: CorruptionPlan,
    patches: PatchBank,
    noise_bank: NoiseBank,
) -> Tuple[VideoClip, AudioClip]:
    """
    Apply every segment of a plan.

    Visual segments are applied per frame in the order occlusion, blur, pixel
    noise; audio segments are mixed in plan order. Streams are independent, so a
    plan with only audio segments leaves the video untouched.

    Args:
        video: Clean video clip
        audio: Clean audio clip
        plan: Plan built for (video.num_frames, audio.num_samples)
        patches: Occluder bank keyed by patch id
        noise_bank: Babble waveforms keyed by noise id

    Returns:
        (corrupted video, corrupted audio)
    """
    if plan.num_frames != video.num_frames or plan.num_samples != audio.num_samples:
        raise SizingError(
            f"Plan sized for T={plan.num_frames}, S={plan.num_samples} applied to "
            f"T={video.num_frames}, S={audio.num_samples}"
        )

    # resolve every id up front so a bad plan fails before any work
    occluders = [_lookup(patches, "patch", seg.patch_id) for seg in plan.occlusion_segments]
    noises = [_lookup(noise_bank, "noise", seg.noise_id) for seg in plan.audio_segments]

    out_video = video
    if plan.occlusion_segments or plan.blur_segments or plan.pixelnoise_segments:
        frames = video.frames.copy()
        for seg, patch in zip(plan.occlusion_segments, occluders):
            for t in range(seg.start, seg.end):
                frames[t] = apply_occlusion(frames[t], patch, seg.position)
        for seg in plan.blur_segments:
            for t in range(seg.start, seg.end):
                frames[t] = gaussian_blur(frames[t], seg.sigma)
        for seg in plan.pixelnoise_segments:
            for t in range(seg.start, seg.end):
                frames[t] = add_pixel_noise(frames[t], seg.variance, plan.seed, t)
        out_video = video.with_frames(frames)

    out_audio = audio
    for seg, noise in zip(plan.audio_segments, noises):
        chunk = _noise_for_span(noise, seg.end - seg.start)
        out_audio = mix_at_snr(out_audio, chunk, seg.snr_db, (seg.start, seg.end))

    logger.debug(
        f"Corrupted pair: {len(plan.occlusion_segments)} occlusion, {len(plan.blur_segments)} blur, "
        f"{len(plan.pixelnoise_segments)} noise, {len(plan.audio_segments)} audio segments"
    )
    return out_video, out_audio
