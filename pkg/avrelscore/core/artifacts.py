"""Artifact bookkeeping: metadata sidecars, seed derivation and writers."""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Sequence

from pydantic import BaseModel, Field

from avrelscore.core.config import TOOL_NAME, TOOL_VERSION
from avrelscore.core.exceptions import AVRelScoreError

logger = logging.getLogger(__name__)

SeedDomain = Literal["train", "test", "init", "data"]

_DOMAIN_BASE: Dict[str, int] = {
    "train": 0,
    "test": 1 << 62,
    "init": 2 << 62,
    "data": 3 << 62,
}
_DOMAIN_SPAN = 1 << 62


class ArtifactMetadata(BaseModel):
    """Sidecar record written next to every artifact."""

    tool: str = Field(default=TOOL_NAME)
    version: str = Field(default=TOOL_VERSION)
    seed: int
    config_hash: str
    created_by: str = Field(description="Subcommand or API call that produced the artifact")
    extra: Dict[str, Any] = Field(default_factory=dict)


def derive_seed(base: int, *parts: Any, domain: SeedDomain = "train") -> int:
    """
    Derive a 64-bit seed from a base seed and identifying parts.

    The result lies inside the range reserved for ``domain`` so that training and
    test corruption seeds can never collide.

    Args:
        base: Base seed
        *parts: Identifying parts (epoch, clip id, ...)
        domain: Seed range to map into

    Returns:
        Non-negative integer seed
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(base).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    raw = int.from_bytes(h.digest(), "little")
    return _DOMAIN_BASE[domain] + (raw % _DOMAIN_SPAN)


def seed_domain(seed: int) -> str:
    for name, start in _DOMAIN_BASE.items():
        if start <= seed < start + _DOMAIN_SPAN:
            return name
    raise AVRelScoreError(f"Seed {seed} lies outside every seed domain")


def assert_seed_domain(seeds: Iterable[int], domain: SeedDomain) -> None:
    """Raise if any seed falls outside ``domain``."""
    for seed in seeds:
        found = seed_domain(seed)
        if found != domain:
            raise AVRelScoreError(
                f"Seed {seed} belongs to the '{found}' range, expected '{domain}'",
                recoverable=False,
            )


def metadata_path(path: Path) -> Path:
    return Path(str(path) + ".meta.json")


def write_metadata(
    path: Path,
    seed: int,
    config_hash: str,
    created_by: str,
    **extra: Any,
) -> Path:
    """
    Write the metadata sidecar for an artifact.

    Args:
        path: Artifact path
        seed: Seed the artifact was produced with
        config_hash: Hash of the configs in effect
        created_by: Producing subcommand
        **extra: Additional JSON-serialisable fields

    Returns:
        Sidecar path
    """
    meta = ArtifactMetadata(seed=seed, config_hash=config_hash, created_by=created_by, extra=extra)
    target = metadata_path(Path(path))
    target.write_text(
        json.dumps(meta.model_dump(mode="json"), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    logger.debug(f"Wrote metadata sidecar: {target}")
    return target


def read_metadata(path: Path) -> ArtifactMetadata:
    target = metadata_path(Path(path))
    if not target.exists():
        raise AVRelScoreError(f"Missing metadata sidecar for {path}")
    return ArtifactMetadata.model_validate_json(target.read_text(encoding="utf-8"))


def write_jsonl(path: Path, records: Iterable[Mapping[str, Any]]) -> int:
    """Write records one JSON object per line; returns the record count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            count += 1
    return count


def read_jsonl(path: Path) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write a CSV with a header row; returns the data row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
            count += 1
    return count


def _csv_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return int(value)
    return value
