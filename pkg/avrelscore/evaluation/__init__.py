"""WER scoring, corrupted test sets, corruption grids and reliability exports."""

from avrelscore.evaluation.views import (
    ClipResult,
    EvalReport,
    GridCondition,
    ReliabilityContrast,
    ReliabilityRow,
    default_conditions,
)
from avrelscore.evaluation.wer import corpus_wer, wer, word_errors
from avrelscore.evaluation.testset import corrupt_clip, corrupt_clips, corrupt_dataset, eval_plan_seed
from avrelscore.evaluation.grid import (
    decode_clip,
    decode_clips,
    evaluate_condition,
    run_grid,
    write_decode_records,
    write_grid_tables,
)
from avrelscore.evaluation.reliability_export import export_reliability, reliability_contrast, reliability_rows
from avrelscore.evaluation.experiments import VARIANTS, SeedOutcome, TrendReport, compare_variants

__all__ = [
    "ClipResult",
    "EvalReport",
    "GridCondition",
    "ReliabilityContrast",
    "ReliabilityRow",
    "default_conditions",
    "corpus_wer",
    "word_errors",
    "wer",
    "corrupt_clip",
    "corrupt_clips",
    "corrupt_dataset",
    "eval_plan_seed",
    "decode_clip",
    "decode_clips",
    "evaluate_condition",
    "run_grid",
    "write_decode_records",
    "write_grid_tables",
    "export_reliability",
    "reliability_contrast",
    "reliability_rows",
    "VARIANTS",
    "SeedOutcome",
    "TrendReport",
    "compare_variants",
]
