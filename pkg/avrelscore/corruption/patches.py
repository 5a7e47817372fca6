"""Procedural occluder bank: solid shapes, textured rectangles and glyphs."""

import logging
from typing import Dict

import numpy as np

from avrelscore.core.config import CorruptionConfig
from avrelscore.corruption.scheduler import patch_ids
from avrelscore.corruption.views import OcclusionPatch

logger = logging.getLogger(__name__)

PatchBank = Dict[str, OcclusionPatch]

_KINDS = ("disc", "textured", "glyph")


def _disc(rng: np.random.Generator, h: int, w: int):
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    inside = ((yy - cy) / (h / 2.0)) ** 2 + ((xx - cx) / (w / 2.0)) ** 2 <= 1.0
    shade = rng.uniform(0.0, 1.0)
    pixels = np.full((h, w), shade)
    return pixels, inside.astype(np.float64)


def _textured(rng: np.random.Generator, h: int, w: int):
    base = rng.uniform(0.2, 0.8)
    stripes = 0.15 * np.sin(np.arange(w) * rng.uniform(0.5, 2.0))[None, :]
    grain = rng.uniform(-0.1, 0.1, size=(h, w))
    pixels = np.clip(base + stripes + grain, 0.0, 1.0)
    return pixels, np.ones((h, w))


def _glyph(rng: np.random.Generator, h: int, w: int):
    strokes = rng.random((h, w)) < 0.45
    strokes[h // 2, :] = True
    pixels = np.where(strokes, rng.uniform(0.0, 0.3), rng.uniform(0.7, 1.0))
    return pixels, strokes.astype(np.float64)


def build_patch_bank(cfg: CorruptionConfig, seed: int = 0) -> PatchBank:
    """
    Generate the occluder bank.

    Args:
        cfg: Supplies bank size and nominal patch size
        seed: Bank seed

    Returns:
        Mapping patch_id -> OcclusionPatch
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x0CC]))
    bank: PatchBank = {}
    for i, patch_id in enumerate(patch_ids(cfg)):
        h = int(max(2, cfg.patch_size + rng.integers(-2, 3)))
        w = int(max(2, cfg.patch_size + rng.integers(-2, 3)))
        kind = _KINDS[i % len(_KINDS)]
        pixels, mask = {"disc": _disc, "textured": _textured, "glyph": _glyph}[kind](rng, h, w)
        opacity = rng.uniform(0.75, 1.0)
        bank[patch_id] = OcclusionPatch(
            patch_id=patch_id,
            pixels=pixels[..., None],
            alpha=np.clip(mask * opacity, 0.0, 1.0),
        )
    logger.debug(f"Built patch bank of {len(bank)} occluders")
    return bank
