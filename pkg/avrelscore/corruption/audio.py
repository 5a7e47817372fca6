"""Babble mixing at a requested signal-to-noise ratio."""

import logging
from typing import Tuple

import numpy as np

from avrelscore.core.exceptions import CorruptionError
from avrelscore.corruption.views import AudioClip

logger = logging.getLogger(__name__)


def mean_square(x: np.ndarray) -> float:
    return float(np.mean(np.square(x))) if x.size else 0.0


def snr_db(signal: np.ndarray, noise: np.ndarray) -> float:
    """10*log10 of mean-square signal power over mean-square noise power."""
    return 10.0 * np.log10(mean_square(signal) / mean_square(noise))


def mix_at_snr(
    signal: AudioClip,
    noise: np.ndarray,
    snr: float,
    span: Tuple[int, int],
) -> AudioClip:
    """
    Add scaled noise over a sample span so the span reaches ``snr`` dB.

    Power is the mean square over the span only.

    Args:
        signal: Clean (or previously corrupted) clip
        noise: Noise waveform; its first (end - start) samples are used
        snr: Target SNR in dB
        span: (start, end) sample range

    Returns:
        New clip; samples outside the span are unchanged
    """
    start, end = span
    if not 0 <= start < end <= signal.num_samples:
        raise CorruptionError(f"Span [{start},{end}) outside signal of {signal.num_samples} samples")
    length = end - start
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape[0] < length:
        raise CorruptionError(f"Noise of {noise.shape[0]} samples is shorter than the span of {length}")

    segment = signal.samples[start:end]
    chunk = noise[:length]
    p_signal = mean_square(segment)
    p_noise = mean_square(chunk)
    if p_noise == 0.0:
        raise CorruptionError("Noise has zero power over the span; gain is undefined")
    if p_signal == 0.0:
        raise CorruptionError("Signal has zero power over the span; SNR is undefined")

    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr / 10.0)))
    out = signal.samples.copy()
    out[start:end] = segment + gain * chunk
    return signal.with_samples(out)
