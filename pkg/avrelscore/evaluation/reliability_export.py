"""Per-frame reliability traces aligned with corruption annotations."""

import logging
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence

import numpy as np

from avrelscore.core.artifacts import write_csv, write_metadata
from avrelscore.core.config import config_hash
from avrelscore.core.exceptions import DatasetError
from avrelscore.corruption.views import CorruptionPlan
from avrelscore.data.views import SyntheticClip
from avrelscore.evaluation.views import ReliabilityContrast, ReliabilityRow
from avrelscore.model.network import AVRelScoreModel
from avrelscore.tensor import no_grad

logger = logging.getLogger(__name__)

RELIABILITY_HEADER = ["clip_id", "frame", "s_a_mean", "s_v_mean", "audio_corrupted", "visual_corrupted"]


def reliability_rows(
    model: AVRelScoreModel,
    clips: Sequence[SyntheticClip],
    plans: Mapping[str, CorruptionPlan],
) -> List[ReliabilityRow]:
    """
    Score each (already corrupted) clip and flag the frames its plan touched.

    Args:
        model: Trained model with reliability scorers
        clips: Corrupted clips
        plans: Plans that produced them, keyed by clip id

    Returns:
        Rows sorted by (clip_id, frame)
    """
    model.eval()
    rows: List[ReliabilityRow] = []
    spf = model.cfg.samples_per_frame
    for clip in sorted(clips, key=lambda c: c.clip_id):
        if clip.clip_id not in plans:
            raise DatasetError(f"No corruption plan stored for clip '{clip.clip_id}'")
        plan = plans[clip.clip_id]
        with no_grad():
            fa, fv = model.extract_features(clip.video, clip.audio)
            trace = model.reliability_score(fa, fv)
        s_a, s_v = trace.frame_means()
        audio_mask = plan.audio_frame_mask(spf)
        visual_mask = plan.visual_frame_mask()
        for t in range(clip.video.num_frames):
            rows.append(ReliabilityRow(
                clip_id=clip.clip_id,
                frame=t,
                s_a_mean=float(s_a[t]),
                s_v_mean=float(s_v[t]),
                audio_corrupted=bool(audio_mask[t]),
                visual_corrupted=bool(visual_mask[t]),
            ))
    return rows


def export_reliability(
    model: AVRelScoreModel,
    clips: Sequence[SyntheticClip],
    plans: Mapping[str, CorruptionPlan],
    path: Path,
    seed: int = 0,
    checkpoint: Optional[Path] = None,
) -> List[ReliabilityRow]:
    """Write the reliability trace CSV plus its sidecar."""
    rows = reliability_rows(model, clips, plans)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(
        path,
        RELIABILITY_HEADER,
        ([r.clip_id, r.frame, r.s_a_mean, r.s_v_mean, r.audio_corrupted, r.visual_corrupted] for r in rows),
    )
    write_metadata(
        path,
        seed=seed,
        config_hash=config_hash(model.cfg),
        created_by="export-rel",
        checkpoint=str(checkpoint) if checkpoint is not None else None,
        n_clips=len({r.clip_id for r in rows}),
    )
    logger.info(f"Exported {len(rows)} reliability rows to {path}")
    return rows


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else float("nan")


def reliability_contrast(rows: Iterable[ReliabilityRow]) -> ReliabilityContrast:
    """Mean s_v over visually corrupted vs clean frames, and s_a over audio-corrupted vs clean frames."""
    v_bad, v_ok, a_bad, a_ok = [], [], [], []
    for r in rows:
        (v_bad if r.visual_corrupted else v_ok).append(r.s_v_mean)
        (a_bad if r.audio_corrupted else a_ok).append(r.s_a_mean)
    return ReliabilityContrast(
        s_v_corrupted=_mean(v_bad),
        s_v_clean=_mean(v_ok),
        s_a_corrupted=_mean(a_bad),
        s_a_clean=_mean(a_ok),
    )
