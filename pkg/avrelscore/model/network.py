"""The reliability-scoring audio-visual recognition network."""

import logging
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from avrelscore.core.artifacts import derive_seed, read_metadata, write_metadata
from avrelscore.core.config import ModelConfig, config_hash
from avrelscore.core.exceptions import AVRelScoreError, DatasetError, ShapeError
from avrelscore.corruption.views import AudioClip, VideoClip
from avrelscore.model.conformer import ConformerEncoder
from avrelscore.model.decoder import TransformerDecoder
from avrelscore.model.frontend import AudioFrontend, VisualFrontend
from avrelscore.model.reliability import ReliabilityScorer, emphasize
from avrelscore.model.views import (
    EncoderOutput,
    FeatureSequence,
    ModelOutput,
    ReliabilityTrace,
    Vocabulary,
)
from avrelscore.tensor import Linear, Module, Tensor, load_checkpoint, ops, save_checkpoint

logger = logging.getLogger(__name__)


class AVRelScoreModel(Module):
    """
    Front-ends, per-stream reliability scoring and emphasis, time-concatenation
    Conformer fusion, a CTC head on the fused features and an attention decoder.

    ``cfg.fusion`` selects the variant:
        relscore: full network
        attention: no scoring/emphasis, time-concatenation fusion kept
        linear: separate encoders per stream, feature concat + linear projection
    ``cfg.modality`` ablates a stream; its front-end is skipped and its features are zeros.
    """

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.seed = seed
        self.vocab = Vocabulary.of_size(cfg.vocab_size)
        rng = np.random.default_rng(derive_seed(seed, "model", domain="init"))

        if cfg.modality in ("av", "visual"):
            self.visual_frontend = VisualFrontend(cfg, rng)
        if cfg.modality in ("av", "audio"):
            self.audio_frontend = AudioFrontend(cfg, rng)
        if cfg.fusion == "relscore":
            self.audio_scorer = ReliabilityScorer(cfg.d_model, cfg.score_kernel, rng)
            self.visual_scorer = ReliabilityScorer(cfg.d_model, cfg.score_kernel, rng)
        if cfg.fusion == "linear":
            self.audio_encoder = ConformerEncoder(cfg, rng)
            self.visual_encoder = ConformerEncoder(cfg, rng)
            self.fuse_proj = Linear(2 * cfg.d_model, cfg.d_model, rng)
        else:
            self.encoder = ConformerEncoder(cfg, rng)
        self.ctc_head = Linear(cfg.d_model, self.vocab.size, rng)
        self.decoder = TransformerDecoder(cfg, self.vocab.size, rng)
        self.name_parameters()
        logger.debug(f"Built {cfg.fusion}/{cfg.modality} model with {self.num_parameters()} parameters")

    # Stages of the forward pass

    def extract_features(self, video: VideoClip, audio: AudioClip) -> Tuple[FeatureSequence, FeatureSequence]:
        """Front-end features (f_a, f_v), each [T x D]."""
        t = video.num_frames
        zeros = np.zeros((t, self.cfg.d_model))
        if self.cfg.modality == "visual":
            fa = FeatureSequence(values=Tensor(zeros), modality="audio")
        else:
            fa = self.audio_frontend(audio, t)
        if self.cfg.modality == "audio":
            fv = FeatureSequence(values=Tensor(zeros), modality="visual")
        else:
            fv = self.visual_frontend(video)
        return fa, fv

    def reliability_score(self, fa: FeatureSequence, fv: FeatureSequence) -> ReliabilityTrace:
        if self.cfg.fusion != "relscore":
            raise AVRelScoreError(f"The '{self.cfg.fusion}' variant has no reliability scorers")
        return ReliabilityTrace(s_a=self.audio_scorer(fa), s_v=self.visual_scorer(fv))

    def joint_encoding(self, fa_emph: FeatureSequence, fv_emph: FeatureSequence) -> Tensor:
        """The full [2T x D] encoding of the audio-first time concatenation."""
        if self.cfg.fusion == "linear":
            raise AVRelScoreError("The 'linear' variant encodes the streams separately")
        if fa_emph.values.shape != fv_emph.values.shape:
            raise ShapeError("fuse_encode", [fa_emph.values.shape, fv_emph.values.shape], reason="stream lengths differ")
        return self.encoder(ops.concat([fa_emph.values, fv_emph.values], axis=0))

    def fuse_encode(self, fa_emph: FeatureSequence, fv_emph: FeatureSequence) -> Tensor:
        """
        Fuse the two streams into [T x D].

        For attentive fusion the streams are concatenated audio-first along
        time to [2T x D], encoded jointly, and the first T rows are returned.
        """
        if fa_emph.values.shape != fv_emph.values.shape:
            raise ShapeError("fuse_encode", [fa_emph.values.shape, fv_emph.values.shape], reason="stream lengths differ")
        if self.cfg.fusion == "linear":
            ea = self.audio_encoder(fa_emph.values)
            ev = self.visual_encoder(fv_emph.values)
            return self.fuse_proj(ops.concat([ea, ev], axis=1))
        encoded = self.joint_encoding(fa_emph, fv_emph)
        return ops.slice(encoded, axis=0, start=0, stop=fa_emph.num_frames)

    def encode(self, video: VideoClip, audio: AudioClip) -> EncoderOutput:
        """Everything up to the fused features and the CTC logits."""
        fa, fv = self.extract_features(video, audio)
        trace = None
        if self.cfg.fusion == "relscore":
            trace = self.reliability_score(fa, fv)
            fa = emphasize(fa, trace.s_a)
            fv = emphasize(fv, trace.s_v)
        memory = self.fuse_encode(fa, fv)
        return EncoderOutput(memory=memory, ctc_logits=self.ctc_head(memory), trace=trace)

    def decode_forward(self, memory: Tensor, y_in: Sequence[int]) -> Tensor:
        return self.decoder(memory, y_in)

    def model_forward(self, video: VideoClip, audio: AudioClip, y_in: Sequence[int]) -> ModelOutput:
        """
        Full forward pass.

        Args:
            video: Grayscale video clip
            audio: Paired waveform with T * samples_per_frame samples
            y_in: Teacher-forced decoder input beginning with sos

        Returns:
            (ctc_logits [T x V], att_logits [J x V], reliability trace or None)
        """
        enc = self.encode(video, audio)
        att_logits = self.decode_forward(enc.memory, y_in)
        return ModelOutput(ctc_logits=enc.ctc_logits, att_logits=att_logits, trace=enc.trace)

    __call__ = model_forward


def save_model(model: AVRelScoreModel, path: Path, seed: int, created_by: str, **extra) -> Path:
    """Write an AVRT checkpoint plus a sidecar carrying the model config."""
    path = Path(path)
    save_checkpoint(path, model.state_dict())
    write_metadata(
        path,
        seed=seed,
        config_hash=config_hash(model.cfg),
        created_by=created_by,
        model_config=model.cfg.model_dump(mode="json", by_alias=True),
        init_seed=model.seed,
        **extra,
    )
    return path


def load_model(path: Path) -> AVRelScoreModel:
    """Rebuild a model from a checkpoint written by ``save_model``."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Checkpoint not found: {path}")
    try:
        meta = read_metadata(path)
    except AVRelScoreError as e:
        raise DatasetError(f"Checkpoint {path} has no metadata sidecar") from e
    if "model_config" not in meta.extra:
        raise DatasetError(f"Checkpoint {path} metadata lacks a model config")
    cfg = ModelConfig.model_validate(meta.extra["model_config"])
    model = AVRelScoreModel(cfg, seed=int(meta.extra.get("init_seed", 0)))
    model.load_state_dict(load_checkpoint(path))
    model.eval()
    return model
