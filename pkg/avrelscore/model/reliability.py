"""Reliability scoring and the emphasis function."""

import numpy as np

from avrelscore.core.exceptions import ShapeError
from avrelscore.model.views import FeatureSequence
from avrelscore.tensor import BatchNorm1d, Conv1d, Module, Tensor, ops


class ReliabilityScorer(Module):
    """
    Three time convolutions D->D->D->D; the first two are followed by batch
    norm and ReLU, the third feeds a sigmoid. Output is [T x D] in (0, 1).

    The third conv has no batch norm or ReLU of its own: a ReLU there would
    keep every score at or above 0.5, so a frame could never be played down.
    """

    def __init__(self, d_model: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        pad = kernel // 2
        self.conv1 = Conv1d(d_model, d_model, kernel, rng, padding=pad)
        self.bn1 = BatchNorm1d(d_model, rng)
        self.conv2 = Conv1d(d_model, d_model, kernel, rng, padding=pad)
        self.bn2 = BatchNorm1d(d_model, rng)
        self.conv3 = Conv1d(d_model, d_model, kernel, rng, padding=pad)
        self.kernel = kernel

    @property
    def receptive_radius(self) -> int:
        return 3 * (self.kernel // 2)

    def __call__(self, features: FeatureSequence) -> Tensor:
        x = ops.relu(self.bn1(self.conv1(features.values)))
        x = ops.relu(self.bn2(self.conv2(x)))
        return ops.sigmoid(self.conv3(x))


def emphasize(features: FeatureSequence, scores: Tensor) -> FeatureSequence:
    """h(f, s) = f + f * s, elementwise."""
    if features.values.shape != scores.shape:
        raise ShapeError("emphasize", [features.values.shape, scores.shape])
    values = ops.add(features.values, ops.hadamard(features.values, scores))
    return FeatureSequence(values=values, modality=features.modality)
