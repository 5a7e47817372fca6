"""Multi-seed comparison of the network against its ablations."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from avrelscore.core.artifacts import write_metadata
from avrelscore.core.config import ConfigBundle, config_hash
from avrelscore.corruption.patches import build_patch_bank
from avrelscore.corruption.scheduler import condition_config
from avrelscore.data.synthetic import build_noise_bank
from avrelscore.data.views import SyntheticClip
from avrelscore.decoding.lm import NGramLM
from avrelscore.evaluation.grid import run_grid
from avrelscore.evaluation.reliability_export import reliability_contrast, reliability_rows
from avrelscore.evaluation.testset import corrupt_clips
from avrelscore.evaluation.views import GridCondition, ReliabilityContrast
from avrelscore.model.network import load_model
from avrelscore.training.trainer import train

logger = logging.getLogger(__name__)

# variant label -> ModelConfig overrides
VARIANTS: Dict[str, Dict[str, str]] = {
    "relscore": {"fusion": "relscore", "modality": "av"},
    "baseline": {"fusion": "linear", "modality": "av"},
    "audio": {"fusion": "attention", "modality": "audio"},
    "visual": {"fusion": "attention", "modality": "visual"},
}

NOISY = GridCondition(visual="both", snr=-5.0)
CLEAN = GridCondition()


class SeedOutcome(BaseModel):
    """WER of every variant under the noisy and clean conditions for one seed."""

    seed: int
    noisy_wer: Dict[str, float]
    clean_wer: Dict[str, float]
    contrast: ReliabilityContrast

    @property
    def relscore_wins(self) -> bool:
        """The full network beats both the audio-only model and the baseline under noise."""
        ours = self.noisy_wer["relscore"]
        return ours < self.noisy_wer["audio"] and ours < self.noisy_wer["baseline"]

    @property
    def clean_gap(self) -> float:
        return self.clean_wer["relscore"] - self.clean_wer["audio"]


class TrendReport(BaseModel):
    outcomes: List[SeedOutcome] = Field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(o.relscore_wins for o in self.outcomes)


def compare_variants(
    train_clips: Sequence[SyntheticClip],
    test_clips: Sequence[SyntheticClip],
    bundle: ConfigBundle,
    seeds: Sequence[int],
    out_dir: Path,
    lm: Optional[NGramLM] = None,
    workers: int = 1,
) -> TrendReport:
    """
    Train every variant per seed and evaluate it on the same corrupted test set.

    The reliability contrast is measured on the relscore model over the noisy
    test copy.

    Args:
        train_clips: Clean training clips; corruption follows ``bundle.train``
        test_clips: Clean test clips
        bundle: Resolved configs; ``model`` is overridden per variant
        seeds: Training and test seeds, one run per seed
        out_dir: Root for per-seed checkpoints, grids and ``trend.json``
        lm: Optional shallow-fusion language model
        workers: Parallel clips per grid cell

    Returns:
        TrendReport with one outcome per seed
    """
    out_dir = Path(out_dir)
    report = TrendReport()
    for seed in seeds:
        seed_dir = out_dir / f"seed{seed}"
        checkpoints = {}
        for label, overrides in VARIANTS.items():
            variant = bundle.model_copy(update={
                "model": bundle.model.model_copy(update=overrides),
                "train": bundle.train.model_copy(update={"seed": seed}),
            })
            logger.info(f"Training '{label}' for seed {seed}")
            checkpoints[label] = train(train_clips, variant, seed_dir / label).final_checkpoint

        reports = run_grid(
            checkpoints, test_clips, bundle, lm,
            conditions=[NOISY, CLEAN], seed=seed, out_dir=seed_dir / "grid", workers=workers,
        )
        noisy = {r.model: r.wer for r in reports if r.condition == NOISY}
        clean = {r.model: r.wer for r in reports if r.condition == CLEAN}

        cfg = condition_config(bundle.corruption, NOISY.visual, NOISY.snr)
        pairs = corrupt_clips(
            test_clips, cfg, seed,
            build_patch_bank(bundle.corruption, seed),
            build_noise_bank(bundle.synthetic, bundle.corruption, seed),
            workers=workers,
        )
        rows = reliability_rows(
            load_model(checkpoints["relscore"]),
            [clip for clip, _ in pairs],
            {clip.clip_id: plan for clip, plan in pairs},
        )
        outcome = SeedOutcome(seed=seed, noisy_wer=noisy, clean_wer=clean, contrast=reliability_contrast(rows))
        logger.info(
            f"Seed {seed}: noisy WER {noisy}, clean WER {clean}, "
            f"visual gap {outcome.contrast.visual_gap:.4f}, audio gap {outcome.contrast.audio_gap:.4f}"
        )
        report.outcomes.append(outcome)

    path = out_dir / "trend.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=1), encoding="utf-8")
    write_metadata(path, seed=seeds[0] if seeds else 0, config_hash=config_hash(bundle.model, bundle.train), created_by="trend")
    logger.info(f"relscore beat audio-only and baseline on {report.wins}/{len(report.outcomes)} seeds")
    return report
