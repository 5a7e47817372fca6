"""Synthetic paired audio-visual corpus and babble noise.

Each word symbol is rendered twice: in audio as a two-tone chord with a
distinct frequency pair, and in video as a distinct 4x4 glyph inside the mouth
region that opens and closes over the symbol's frames. Either stream alone
carries the transcript.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from avrelscore.core.artifacts import derive_seed
from avrelscore.core.config import CorruptionConfig, SyntheticSpec
from avrelscore.core.exceptions import DatasetError
from avrelscore.corruption.scheduler import noise_ids
from avrelscore.corruption.views import AudioClip, Rect, VideoClip
from avrelscore.data.manifest import save_manifest
from avrelscore.data.media import write_avt
from avrelscore.data.views import Manifest, ManifestEntry, SyntheticClip
from avrelscore.model.views import WORDS

logger = logging.getLogger(__name__)

LOW_TONES = (300.0, 420.0, 540.0, 660.0)
HIGH_TONES = (900.0, 1100.0, 1300.0, 1500.0)
GLYPH_GRID = 4


def tone_pair(symbol: int) -> tuple:
    return LOW_TONES[symbol % 4], HIGH_TONES[symbol // 4]


def glyph_pattern(symbol: int) -> np.ndarray:
    """Boolean [4 x 4] cell pattern; row 0 is the symbol's own nibble, so patterns are distinct."""
    rows = [(symbol * (2 * r + 1) + 5 * r) % 16 for r in range(GLYPH_GRID)]
    return np.array([[(row >> (3 - c)) & 1 for c in range(GLYPH_GRID)] for row in rows], dtype=bool)


def synthesize_audio(
    symbols: Sequence[int],
    spec: SyntheticSpec,
    rng: np.random.Generator,
    pitch: float = 1.0,
) -> np.ndarray:
    """Concatenated chords, one per symbol, each frames_per_symbol frames long; ``pitch`` scales every tone."""
    n = spec.frames_per_symbol * spec.samples_per_frame
    t = np.arange(n) / spec.sample_rate
    fade = max(1, n // 10)
    envelope = np.ones(n)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
    envelope[:fade] = ramp
    envelope[-fade:] = ramp[::-1]
    pieces = []
    for symbol in symbols:
        chord = np.zeros(n)
        for f in tone_pair(symbol):
            freq = pitch * f * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0))
            chord += 0.5 * np.sin(2.0 * np.pi * freq * t + rng.uniform(0.0, 2.0 * np.pi))
        pieces.append(chord * (0.2 + 0.8 * envelope))
    return np.concatenate(pieces)


def background_texture(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Smooth low-contrast texture [H x W]."""
    coarse = rng.uniform(-1.0, 1.0, size=(spec.frame_height // 4 + 1, spec.frame_width // 4 + 1))
    texture = np.kron(coarse, np.ones((4, 4)))[: spec.frame_height, : spec.frame_width]
    return 0.5 + 0.08 * texture


def render_video(symbols: Sequence[int], spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Frames [T x H x W x 1]: glyph animation inside the mouth region over a texture."""
    top, left, height, width = spec.mouth_region
    background = background_texture(spec, rng)
    rows = np.minimum(np.arange(height) * GLYPH_GRID // height, GLYPH_GRID - 1)
    cols = np.minimum(np.arange(width) * GLYPH_GRID // width, GLYPH_GRID - 1)
    f = spec.frames_per_symbol
    frames = []
    for symbol in symbols:
        cells = np.where(glyph_pattern(symbol), 0.9, 0.1)[rows][:, cols]
        for i in range(f):
            openness = np.sin(np.pi * (i + 0.5) / f)
            weight = 0.4 + 0.6 * openness
            frame = background.copy()
            region = frame[top:top + height, left:left + width]
            frame[top:top + height, left:left + width] = (1.0 - weight) * region + weight * cells
            frames.append(frame)
    return np.clip(np.stack(frames), 0.0, 1.0)[..., None]


def synthesize_clip(spec: SyntheticSpec, index: int, split: str = "train") -> SyntheticClip:
    """Generate one clip; deterministic in (spec, split, index)."""
    rng = np.random.default_rng(derive_seed(spec.seed, split, index, domain="data"))
    length = int(rng.integers(spec.min_symbols, spec.max_symbols + 1))
    symbols = [int(s) for s in rng.integers(0, spec.vocab_size, size=length)]
    frames = render_video(symbols, spec, rng)
    samples = synthesize_audio(symbols, spec, rng)
    return SyntheticClip(
        clip_id=f"{split}-{index:04d}",
        video=VideoClip(frames=frames, mouth_region=Rect.from_sequence(spec.mouth_region), fps=spec.fps),
        audio=AudioClip(samples=samples, sample_rate=spec.sample_rate),
        transcript=[WORDS[s] for s in symbols],
    )


def generate_clips(spec: SyntheticSpec, n_clips: int, split: str = "train") -> List[SyntheticClip]:
    if n_clips < 1:
        raise DatasetError(f"n_clips must be at least 1, got {n_clips}")
    return [synthesize_clip(spec, i, split) for i in range(n_clips)]


def write_clip(clip: SyntheticClip, root: Path) -> ManifestEntry:
    region = clip.video.mouth_region
    video_rel = f"media/{clip.clip_id}.video.avt"
    audio_rel = f"media/{clip.clip_id}.audio.avt"
    write_avt(root / video_rel, clip.video.frames)
    write_avt(root / audio_rel, clip.audio.samples)
    return ManifestEntry(
        clip_id=clip.clip_id,
        video_path=video_rel,
        audio_path=audio_rel,
        transcript=clip.transcript,
        num_frames=clip.video.num_frames,
        num_samples=clip.audio.num_samples,
        fps=clip.video.fps,
        sample_rate=clip.audio.sample_rate,
        mouth_region=[region.top, region.left, region.height, region.width],
    )


def generate_dataset(
    spec: SyntheticSpec,
    n_clips: int,
    out_dir: Path,
    split: str = "train",
    workers: int = 1,
) -> Manifest:
    """
    Generate a corpus on disk: AVT1 media plus a manifest.

    Args:
        spec: Corpus definition
        n_clips: Number of clips
        out_dir: Output directory
        split: Clip id prefix and seed component
        workers: Parallel writers; output is identical for any value

    Returns:
        The written manifest
    """
    if n_clips < 1:
        raise DatasetError(f"n_clips must be at least 1, got {n_clips}")
    root = Path(out_dir)
    try:
        (root / "media").mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetError(f"Cannot create {root}: {e}") from e

    def job(i: int) -> ManifestEntry:
        return write_clip(synthesize_clip(spec, i, split), root)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        entries = list(pool.map(job, range(n_clips)))
    manifest = Manifest(entries=entries)
    save_manifest(manifest, root)
    logger.info(f"Generated {n_clips} '{split}' clips under {root}")
    return manifest


def make_babble(spec: SyntheticSpec, k_voices: int, seed: int, num_samples: int) -> np.ndarray:
    """
    Sum of k random synthetic utterances, normalised to unit RMS.

    Args:
        spec: Corpus definition supplying the symbol signatures
        k_voices: Number of overlapping voices (at least 3)
        seed: Bank seed
        num_samples: Output length

    Returns:
        Babble waveform [num_samples]
    """
    if k_voices < 3:
        raise DatasetError(f"Babble needs at least 3 voices, got {k_voices}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xBAB]))
    symbol_len = spec.frames_per_symbol * spec.samples_per_frame
    n_symbols = -(-num_samples // symbol_len) + 1
    mix = np.zeros(num_samples)
    for _ in range(k_voices):
        symbols = rng.integers(0, spec.vocab_size, size=n_symbols)
        pitch = rng.uniform(0.85, 1.15)
        voice = synthesize_audio([int(s) for s in symbols], spec, rng, pitch=pitch)
        shift = int(rng.integers(0, symbol_len))
        mix += rng.uniform(0.5, 1.0) * voice[shift:shift + num_samples]
    return mix / np.sqrt(np.mean(mix ** 2))


def build_noise_bank(spec: SyntheticSpec, cfg: CorruptionConfig, seed: int = 0) -> Dict[str, np.ndarray]:
    """Babble bank keyed by noise id, each long enough for the longest clip."""
    length = spec.max_frames * spec.samples_per_frame
    return {
        noise_id: make_babble(spec, spec.babble_voices, derive_seed(seed, "babble", i, domain="data"), length)
        for i, noise_id in enumerate(noise_ids(cfg))
    }
