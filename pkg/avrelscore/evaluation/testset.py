"""Seeded corrupted test sets.

A test clip's plan seed depends only on (base seed, clip id) and lies in the
test seed range, so every grid condition corrupts the same chunks of the same
clips and never reuses a training plan.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from avrelscore.core.artifacts import derive_seed, write_metadata
from avrelscore.core.config import CorruptionConfig, config_hash
from avrelscore.corruption.patches import PatchBank
from avrelscore.corruption.pipeline import corrupt_pair
from avrelscore.corruption.plan_io import save_plans
from avrelscore.corruption.scheduler import plan_corruption
from avrelscore.corruption.views import CorruptionPlan
from avrelscore.data.manifest import save_manifest
from avrelscore.data.synthetic import write_clip
from avrelscore.data.views import Manifest, SyntheticClip

logger = logging.getLogger(__name__)

PLANS_NAME = "plans.jsonl"


def eval_plan_seed(seed: int, clip_id: str) -> int:
    return derive_seed(seed, clip_id, domain="test")


def corrupt_clip(
    clip: SyntheticClip,
    cfg: CorruptionConfig,
    seed: int,
    patches: PatchBank,
    noise_bank: Mapping[str, np.ndarray],
) -> Tuple[SyntheticClip, CorruptionPlan]:
    plan = plan_corruption(
        eval_plan_seed(seed, clip.clip_id),
        clip.video.num_frames,
        clip.audio.num_samples,
        cfg,
        mouth_region=clip.video.mouth_region,
    )
    video, audio = corrupt_pair(clip.video, clip.audio, plan, patches, noise_bank)
    return clip.model_copy(update={"video": video, "audio": audio}), plan


def corrupt_clips(
    clips: Sequence[SyntheticClip],
    cfg: CorruptionConfig,
    seed: int,
    patches: PatchBank,
    noise_bank: Mapping[str, np.ndarray],
    workers: int = 1,
) -> List[Tuple[SyntheticClip, CorruptionPlan]]:
    """Corrupt every clip; results are sorted by clip id for any worker count."""
    ordered = sorted(clips, key=lambda c: c.clip_id)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda c: corrupt_clip(c, cfg, seed, patches, noise_bank), ordered))


def corrupt_dataset(
    clips: Sequence[SyntheticClip],
    cfg: CorruptionConfig,
    seed: int,
    patches: PatchBank,
    noise_bank: Mapping[str, np.ndarray],
    out_dir: Path,
    workers: int = 1,
) -> Tuple[Manifest, Dict[str, CorruptionPlan]]:
    """
    Write a corrupted copy of a corpus with its plans.

    Args:
        clips: Clean clips
        cfg: Corruption config (usually a forced-presence grid config)
        seed: Base seed; plan seeds are derived in the test range
        patches: Occluder bank
        noise_bank: Babble bank
        out_dir: Directory receiving media/, manifest.jsonl and plans.jsonl
        workers: Parallel writers

    Returns:
        (manifest of the corrupted clips, plans keyed by clip id)
    """
    root = Path(out_dir)
    (root / "media").mkdir(parents=True, exist_ok=True)
    results = corrupt_clips(clips, cfg, seed, patches, noise_bank, workers)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        entries = list(pool.map(lambda r: write_clip(r[0], root), results))
    manifest = Manifest(entries=entries)
    save_manifest(manifest, root)
    plans = {clip.clip_id: plan for clip, plan in results}
    plans_path = root / PLANS_NAME
    save_plans(plans_path, plans)
    write_metadata(plans_path, seed=seed, config_hash=config_hash(cfg), created_by="corrupt", n_clips=len(plans))
    logger.info(f"Corrupted {len(plans)} clips into {root}")
    return manifest, plans
