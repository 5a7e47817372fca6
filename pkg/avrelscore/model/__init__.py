"""Reliability-scoring audio-visual network."""

from avrelscore.model.views import (
    BLANK,
    EOS,
    SOS,
    EncoderOutput,
    FeatureSequence,
    ModelOutput,
    ReliabilityTrace,
    Vocabulary,
)
from avrelscore.model.frontend import AudioFrontend, VisualFrontend
from avrelscore.model.reliability import ReliabilityScorer, emphasize
from avrelscore.model.conformer import ConformerBlock, ConformerEncoder
from avrelscore.model.decoder import TransformerDecoder
from avrelscore.model.network import AVRelScoreModel, load_model, save_model

__all__ = [
    "BLANK",
    "EOS",
    "SOS",
    "EncoderOutput",
    "FeatureSequence",
    "ModelOutput",
    "ReliabilityTrace",
    "Vocabulary",
    "AudioFrontend",
    "VisualFrontend",
    "ReliabilityScorer",
    "emphasize",
    "ConformerBlock",
    "ConformerEncoder",
    "TransformerDecoder",
    "AVRelScoreModel",
    "load_model",
    "save_model",
]
