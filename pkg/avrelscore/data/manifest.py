"""Manifest persistence, validation and clip loading."""

import logging
from pathlib import Path
from typing import List, Tuple

from pydantic import ValidationError

from avrelscore.core.artifacts import read_jsonl, write_jsonl
from avrelscore.core.exceptions import DatasetError
from avrelscore.corruption.views import AudioClip, Rect, VideoClip
from avrelscore.data.media import read_avt
from avrelscore.data.views import Manifest, ManifestEntry, SyntheticClip

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"


def save_manifest(manifest: Manifest, directory: Path) -> Path:
    """Write entries sorted by clip id to ``directory/manifest.jsonl``."""
    path = Path(directory) / MANIFEST_NAME
    entries = sorted(manifest.entries, key=lambda e: e.clip_id)
    write_jsonl(path, (e.model_dump(mode="json") for e in entries))
    return path


def load_manifest(path: Path) -> Tuple[Manifest, Path]:
    """
    Read a manifest file or the manifest inside a directory.

    Returns:
        (manifest, root directory that entry paths are relative to)
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise DatasetError(f"Manifest not found: {path}")
    try:
        entries = [ManifestEntry.model_validate(r) for r in read_jsonl(path)]
    except ValidationError as e:
        raise DatasetError(f"Invalid manifest entry in {path}: {e.errors()[0]['msg']}") from e
    ids = [e.clip_id for e in entries]
    if len(set(ids)) != len(ids):
        raise DatasetError(f"Duplicate clip ids in {path}")
    return Manifest(entries=entries), path.parent


def load_clip(entry: ManifestEntry, root: Path) -> Tuple[VideoClip, AudioClip]:
    """Read a clip's media and check it against the declared lengths."""
    frames = read_avt(Path(root) / entry.video_path)
    samples = read_avt(Path(root) / entry.audio_path)
    if frames.ndim != 4 or frames.shape[0] != entry.num_frames:
        raise DatasetError(
            f"Clip '{entry.clip_id}': video has shape {frames.shape}, manifest declares T={entry.num_frames}"
        )
    if samples.ndim != 1 or samples.shape[0] != entry.num_samples:
        raise DatasetError(
            f"Clip '{entry.clip_id}': audio has shape {samples.shape}, manifest declares S={entry.num_samples}"
        )
    video = VideoClip(frames=frames, mouth_region=Rect.from_sequence(entry.mouth_region), fps=entry.fps)
    audio = AudioClip(samples=samples, sample_rate=entry.sample_rate)
    return video, audio


def validate_manifest(manifest: Manifest, root: Path) -> None:
    """Every referenced file exists and matches its declared lengths."""
    for entry in manifest.entries:
        for rel in (entry.video_path, entry.audio_path):
            if not (Path(root) / rel).exists():
                raise DatasetError(f"Clip '{entry.clip_id}': missing file {rel}")
        load_clip(entry, root)
    logger.info(f"Manifest valid: {len(manifest.entries)} clips")


def load_clips(manifest: Manifest, root: Path) -> List[SyntheticClip]:
    """All clips of a manifest in memory, in manifest order."""
    clips = []
    for entry in manifest.entries:
        video, audio = load_clip(entry, root)
        clips.append(SyntheticClip(clip_id=entry.clip_id, video=video, audio=audio, transcript=entry.transcript))
    return clips
