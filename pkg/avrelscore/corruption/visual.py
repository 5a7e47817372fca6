"""Frame-level visual corruptions: occlusion patches, Gaussian blur, pixel noise."""

import logging
from typing import Tuple

import numpy as np
from scipy.ndimage import correlate1d

from avrelscore.core.exceptions import CorruptionError
from avrelscore.corruption.views import OcclusionPatch

logger = logging.getLogger(__name__)

BLUR_KERNEL_SIZE = 7
BLUR_SIGMA_RANGE = (0.1, 2.0)


def _as_image(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        frame = frame[..., None]
    if frame.ndim != 3:
        raise CorruptionError(f"Expected an [H x W x C] frame, got shape {frame.shape}")
    return frame


def patch_origin(
    frame_size: Tuple[int, int],
    patch_size: Tuple[int, int],
    position: Tuple[int, int],
) -> Tuple[int, int]:
    """Top-left corner of a patch centred at ``position``, clamped inside the frame."""
    (fh, fw), (ph, pw) = frame_size, patch_size
    top = int(np.clip(position[0] - ph // 2, 0, fh - ph))
    left = int(np.clip(position[1] - pw // 2, 0, fw - pw))
    return top, left


def apply_occlusion(frame: np.ndarray, patch: OcclusionPatch, position: Tuple[int, int]) -> np.ndarray:
    """
    Alpha-blend an occluder onto a frame.

    Args:
        frame: [H x W x C] image in [0, 1]
        patch: Occluder with its alpha mask
        position: Patch centre (row, col); clamped so the patch fits

    Returns:
        New frame with out = alpha*patch + (1-alpha)*frame on the covered rectangle
    """
    image = _as_image(frame)
    h, w, c = image.shape
    ph, pw = patch.size
    if ph > h or pw > w:
        raise CorruptionError(f"Patch '{patch.patch_id}' of {ph}x{pw} exceeds frame {h}x{w}")
    if patch.pixels.shape[2] != c:
        raise CorruptionError(f"Patch '{patch.patch_id}' has {patch.pixels.shape[2]} channels, frame has {c}")

    top, left = patch_origin((h, w), (ph, pw), position)
    out = image.copy()
    alpha = patch.alpha[..., None]
    region = out[top:top + ph, left:left + pw]
    out[top:top + ph, left:left + pw] = alpha * patch.pixels + (1.0 - alpha) * region
    return np.clip(out, 0.0, 1.0)


def gaussian_kernel(sigma: float, size: int = BLUR_KERNEL_SIZE) -> np.ndarray:
    """Normalised 1D Gaussian taps."""
    if sigma <= 0:
        raise CorruptionError(f"Blur sigma must be positive, got {sigma}")
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    taps = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return taps / taps.sum()


def gaussian_blur(frame: np.ndarray, sigma: float) -> np.ndarray:
    """
    Separable 7-tap Gaussian blur with reflected borders.

    Args:
        frame: [H x W x C] image
        sigma: Standard deviation in pixels, within BLUR_SIGMA_RANGE

    Returns:
        Blurred frame, clamped to [0, 1]
    """
    low, high = BLUR_SIGMA_RANGE
    if not low <= sigma <= high:
        raise CorruptionError(f"Blur sigma must lie in [{low}, {high}], got {sigma}")
    kernel = gaussian_kernel(sigma)
    image = _as_image(frame)
    out = correlate1d(image, kernel, axis=0, mode="reflect")
    out = correlate1d(out, kernel, axis=1, mode="reflect")
    return np.clip(out, 0.0, 1.0)


def pixel_noise(shape: Tuple[int, ...], variance: float, seed: int, frame_index: int = 0) -> np.ndarray:
    """Gaussian(0, variance) noise, deterministic per (seed, frame_index)."""
    if not 0.0 < variance <= 0.2:
        raise CorruptionError(f"Pixel noise variance must lie in (0, 0.2], got {variance}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(frame_index)]))
    return rng.normal(0.0, np.sqrt(variance), size=shape)


def add_pixel_noise(frame: np.ndarray, variance: float, seed: int, frame_index: int = 0) -> np.ndarray:
    """
    Additive Gaussian pixel noise followed by clamping to [0, 1].

    Args:
        frame: [H x W x C] image
        variance: Noise variance in (0, 0.2]
        seed: Plan seed
        frame_index: Index of the frame within its clip

    Returns:
        Noisy frame
    """
    image = _as_image(frame)
    return np.clip(image + pixel_noise(image.shape, variance, seed, frame_index), 0.0, 1.0)
