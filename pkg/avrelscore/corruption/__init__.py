"""Audio-visual corruption modeling: chunk schedules, occlusion, blur, pixel noise and babble."""

from avrelscore.corruption.views import (
    AudioClip,
    AudioSegment,
    BlurSegment,
    CorruptionPlan,
    OcclusionPatch,
    OcclusionSegment,
    PixelNoiseSegment,
    Rect,
    VideoClip,
)
from avrelscore.corruption.scheduler import condition_config, plan_corruption, schedule_chunks
from avrelscore.corruption.visual import add_pixel_noise, apply_occlusion, gaussian_blur
from avrelscore.corruption.audio import mix_at_snr, snr_db
from avrelscore.corruption.patches import build_patch_bank
from avrelscore.corruption.pipeline import corrupt_pair
from avrelscore.corruption.plan_io import load_plans, save_plans

__all__ = [
    "AudioClip",
    "AudioSegment",
    "BlurSegment",
    "CorruptionPlan",
    "OcclusionPatch",
    "OcclusionSegment",
    "PixelNoiseSegment",
    "Rect",
    "VideoClip",
    "condition_config",
    "plan_corruption",
    "schedule_chunks",
    "add_pixel_noise",
    "apply_occlusion",
    "gaussian_blur",
    "mix_at_snr",
    "snr_db",
    "build_patch_bank",
    "corrupt_pair",
    "load_plans",
    "save_plans",
]
