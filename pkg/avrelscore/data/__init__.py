"""Synthetic paired corpus, babble bank, media container and manifests."""

from avrelscore.data.views import Manifest, ManifestEntry, SyntheticClip
from avrelscore.data.media import dump_pgm, read_avt, write_avt
from avrelscore.data.manifest import load_clip, load_clips, load_manifest, save_manifest, validate_manifest
from avrelscore.data.synthetic import (
    build_noise_bank,
    generate_clips,
    generate_dataset,
    make_babble,
    synthesize_clip,
    write_clip,
)

__all__ = [
    "Manifest",
    "ManifestEntry",
    "SyntheticClip",
    "dump_pgm",
    "read_avt",
    "write_avt",
    "load_clip",
    "load_clips",
    "load_manifest",
    "save_manifest",
    "validate_manifest",
    "build_noise_bank",
    "generate_clips",
    "generate_dataset",
    "make_babble",
    "synthesize_clip",
    "write_clip",
]
