"""JSON-lines persistence of corruption plans, one per clip."""

from pathlib import Path
from typing import Dict, Mapping

from avrelscore.core.artifacts import read_jsonl, write_jsonl
from avrelscore.core.exceptions import DatasetError
from avrelscore.corruption.views import CorruptionPlan


def save_plans(path: Path, plans: Mapping[str, CorruptionPlan]) -> int:
    """Write plans sorted by clip id; returns the number written."""
    records = (
        {"clip_id": clip_id, "plan": plans[clip_id].model_dump(mode="json")}
        for clip_id in sorted(plans)
    )
    return write_jsonl(Path(path), records)


def load_plans(path: Path) -> Dict[str, CorruptionPlan]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Plan file not found: {path}")
    plans: Dict[str, CorruptionPlan] = {}
    for record in read_jsonl(path):
        clip_id = record["clip_id"]
        if clip_id in plans:
            raise DatasetError(f"Duplicate clip id '{clip_id}' in {path}")
        plans[clip_id] = CorruptionPlan.model_validate(record["plan"])
    return plans
