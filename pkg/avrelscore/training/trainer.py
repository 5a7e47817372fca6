"""Curriculum trainer with on-the-fly audio-visual corruption."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from avrelscore.core.artifacts import derive_seed, write_csv, write_metadata
from avrelscore.core.config import ConfigBundle, config_hash
from avrelscore.core.exceptions import ConfigError, DatasetError
from avrelscore.core.logging import log_train_step
from avrelscore.corruption.patches import build_patch_bank
from avrelscore.corruption.pipeline import corrupt_pair
from avrelscore.corruption.scheduler import plan_corruption
from avrelscore.corruption.views import AudioClip, OcclusionPatch, VideoClip
from avrelscore.data.synthetic import build_noise_bank
from avrelscore.data.views import SyntheticClip
from avrelscore.model.network import AVRelScoreModel, save_model
from avrelscore.tensor import no_grad, ops
from avrelscore.training.losses import attention_loss, ctc_greedy_decode, ctc_loss, joint_loss
from avrelscore.training.optimizer import Adam
from avrelscore.training.views import METRICS_HEADER, CurriculumStage, MetricsRow, TrainResult, stages_from_config

logger = logging.getLogger(__name__)


def check_stages(stages: Sequence[CurriculumStage]) -> None:
    if not stages:
        raise ConfigError("stage_frames", "At least one curriculum stage is required")
    caps = [s.max_frames for s in stages]
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise ConfigError("stage_frames", f"Stage caps must be strictly increasing, got {caps}")


class Trainer:
    """
    Trains one model through the curriculum.

    Every example gets a fresh corruption plan each epoch, seeded from
    (base seed, epoch, clip id) inside the training seed range.
    """

    def __init__(
        self,
        model: AVRelScoreModel,
        bundle: ConfigBundle,
        clips: Sequence[SyntheticClip],
        out_dir: Path,
        stages: Optional[Sequence[CurriculumStage]] = None,
        patches: Optional[Dict[str, OcclusionPatch]] = None,
        noise_bank: Optional[Dict[str, np.ndarray]] = None,
    ):
        self.model = model
        self.bundle = bundle
        self.cfg = bundle.train
        self.clips = sorted(clips, key=lambda c: c.clip_id)
        self.out_dir = Path(out_dir)
        self.stages = list(stages) if stages is not None else stages_from_config(self.cfg)
        check_stages(self.stages)
        self.seed = self.cfg.seed
        self.patches = patches if patches is not None else build_patch_bank(bundle.corruption, self.seed)
        self.noise_bank = noise_bank if noise_bank is not None else build_noise_bank(
            bundle.synthetic, bundle.corruption, self.seed
        )
        self.optimizer = Adam(list(model.parameters()), self.cfg)
        self.history: List[MetricsRow] = []
        self.global_epoch = 0

    def prepare_example(self, clip: SyntheticClip, epoch: int) -> Tuple[VideoClip, AudioClip]:
        if not self.cfg.corrupt_training:
            return clip.video, clip.audio
        plan = plan_corruption(
            derive_seed(self.seed, epoch, clip.clip_id, domain="train"),
            clip.video.num_frames,
            clip.audio.num_samples,
            self.bundle.corruption,
            mouth_region=clip.video.mouth_region,
        )
        return corrupt_pair(clip.video, clip.audio, plan, self.patches, self.noise_bank)

    def train_step(self, batch: Sequence[SyntheticClip], stage: int) -> MetricsRow:
        """Average the joint loss over the batch and take one optimiser step."""
        self.model.train()
        self.optimizer.zero_grad()
        vocab = self.model.vocab
        sums = np.zeros(3)
        for clip in batch:
            video, audio = self.prepare_example(clip, self.global_epoch)
            labels = vocab.encode(clip.transcript)
            out = self.model.model_forward(video, audio, [vocab.sos] + labels)
            l_ctc = ctc_loss(out.ctc_logits, labels)
            l_att = attention_loss(out.att_logits, labels + [vocab.eos])
            l_joint = joint_loss(l_att, l_ctc, self.cfg.lambda_)
            ops.scale(l_joint, factor=1.0 / len(batch)).backward()
            sums += (l_ctc.item(), l_att.item(), l_joint.item())
        lr = self.optimizer.step()
        means = sums / len(batch)
        row = MetricsRow(
            step=self.optimizer.state.step,
            stage=stage,
            lr=lr,
            l_ctc=float(means[0]),
            l_att=float(means[1]),
            l_joint=float(means[2]),
        )
        log_train_step(row.step, row.stage, row.lr, row.l_ctc, row.l_att, row.l_joint)
        return row

    def stage_clips(self, stage: CurriculumStage, index: int) -> List[SyntheticClip]:
        selected = [c for c in self.clips if c.video.num_frames <= stage.max_frames]
        if not selected:
            raise DatasetError(f"Curriculum stage {index} (max_frames={stage.max_frames}) has no clips")
        return selected

    def run_stage(self, stage: CurriculumStage, index: int) -> None:
        clips = self.stage_clips(stage, index)
        logger.info(f"Stage {index}: {len(clips)} clips with T <= {stage.max_frames}, {stage.epochs} epochs")
        for _ in range(stage.epochs):
            rng = np.random.default_rng(derive_seed(self.seed, "shuffle", self.global_epoch, domain="train"))
            order = rng.permutation(len(clips))
            size = self.cfg.batch_size
            for start in range(0, len(order), size):
                batch = [clips[i] for i in order[start:start + size]]
                self.history.append(self.train_step(batch, index))
            self.log_greedy_sample(clips[0])
            self.global_epoch += 1

    def log_greedy_sample(self, clip: SyntheticClip) -> None:
        if not logger.isEnabledFor(logging.DEBUG):
            return
        self.model.eval()
        with no_grad():
            enc = self.model.encode(clip.video, clip.audio)
        hyp = self.model.vocab.decode(ctc_greedy_decode(log_softmax(enc.ctc_logits.data, axis=-1)))
        logger.debug(
            f"Epoch {self.global_epoch} greedy CTC on {clip.clip_id}: "
            f"{' '.join(hyp)!r} (ref {' '.join(clip.transcript)!r})"
        )

    def save_stage_checkpoint(self, index: int) -> Path:
        path = self.out_dir / f"checkpoint_stage{index}.avrt"
        save_model(
            self.model,
            path,
            seed=self.seed,
            created_by="train",
            stage=index,
            step=self.optimizer.state.step,
            train_config_hash=config_hash(self.cfg, self.bundle.corruption),
        )
        return path

    def train(self) -> TrainResult:
        """
        Run every stage, writing a checkpoint at each stage end and the metrics CSV.

        Returns:
            TrainResult with checkpoint paths and the per-step history
        """
        self.out_dir.mkdir(parents=True, exist_ok=True)
        checkpoints = []
        for index, stage in enumerate(self.stages):
            self.run_stage(stage, index)
            checkpoints.append(self.save_stage_checkpoint(index))

        metrics_path = self.out_dir / "metrics.csv"
        write_csv(metrics_path, METRICS_HEADER, (row.as_row() for row in self.history))
        write_metadata(
            metrics_path,
            seed=self.seed,
            config_hash=config_hash(self.model.cfg, self.cfg, self.bundle.corruption),
            created_by="train",
            stages=[s.model_dump() for s in self.stages],
        )
        logger.info(f"Training finished after {self.optimizer.state.step} steps")
        return TrainResult(checkpoints=checkpoints, metrics_path=metrics_path, history=self.history)


def train(
    clips: Sequence[SyntheticClip],
    bundle: ConfigBundle,
    out_dir: Path,
    stages: Optional[Sequence[CurriculumStage]] = None,
) -> TrainResult:
    """Build a model from ``bundle.model`` seeded by the train seed and run the curriculum."""
    model = AVRelScoreModel(bundle.model, seed=bundle.train.seed)
    return Trainer(model, bundle, clips, out_dir, stages=stages).train()
