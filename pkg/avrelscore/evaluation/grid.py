"""Decoding clips and sweeping trained models over the corruption grid."""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from avrelscore.core.artifacts import write_csv, write_jsonl, write_metadata
from avrelscore.core.config import GRID_SNRS, ConfigBundle, config_hash
from avrelscore.core.exceptions import DatasetError
from avrelscore.core.logging import log_eval_condition
from avrelscore.corruption.patches import PatchBank, build_patch_bank
from avrelscore.corruption.scheduler import condition_config
from avrelscore.data.synthetic import build_noise_bank
from avrelscore.data.views import SyntheticClip
from avrelscore.decoding.beam_search import BeamSearchDecoder, ModelScoringSource
from avrelscore.decoding.lm import NGramLM
from avrelscore.evaluation.testset import corrupt_clips
from avrelscore.evaluation.views import ClipResult, EvalReport, GridCondition, default_conditions
from avrelscore.evaluation.wer import corpus_wer
from avrelscore.model.network import AVRelScoreModel, load_model
from avrelscore.tensor import no_grad

logger = logging.getLogger(__name__)

TABLE_HEADER = ["model", "visual", "audio_mode", "clean"] + [f"{s:g}" for s in GRID_SNRS]
LONG_HEADER = ["model", "visual", "snr", "audio_mode", "wer", "n_utts"]


def decode_clip(model: AVRelScoreModel, decoder: BeamSearchDecoder, clip: SyntheticClip) -> ClipResult:
    """Encode once, beam-search, and summarise the reliability trace per frame."""
    with no_grad():
        enc = model.encode(clip.video, clip.audio)
    result = decoder.decode(ModelScoringSource(model, enc))
    s_a_mean: List[float] = []
    s_v_mean: List[float] = []
    if enc.trace is not None:
        a, v = enc.trace.frame_means()
        s_a_mean, s_v_mean = a.tolist(), v.tolist()
    hyp = result.hypothesis
    return ClipResult(
        clip_id=clip.clip_id,
        reference=list(clip.transcript),
        hypothesis=model.vocab.decode(result.tokens),
        combined=hyp.combined,
        score_att=hyp.score_att,
        score_ctc=hyp.score_ctc,
        score_lm=hyp.score_lm,
        reached_eos=result.reached_eos,
        s_a_mean=s_a_mean,
        s_v_mean=s_v_mean,
    )


def decode_clips(
    model: AVRelScoreModel,
    decoder: BeamSearchDecoder,
    clips: Sequence[SyntheticClip],
    workers: int = 1,
) -> List[ClipResult]:
    """Decode in parallel with a frozen model; output sorted by clip id."""
    model.eval()
    ordered = sorted(clips, key=lambda c: c.clip_id)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda c: decode_clip(model, decoder, c), ordered))


def write_decode_records(path: Path, rows: Sequence[ClipResult], seed: int, cfg_hash: str, **extra) -> Path:
    write_jsonl(path, (r.model_dump(mode="json") for r in sorted(rows, key=lambda r: r.clip_id)))
    write_metadata(path, seed=seed, config_hash=cfg_hash, created_by="decode", **extra)
    return Path(path)


def evaluate_condition(
    model: AVRelScoreModel,
    model_name: str,
    clips: Sequence[SyntheticClip],
    condition: GridCondition,
    bundle: ConfigBundle,
    lm: Optional[NGramLM],
    seed: int,
    patches: PatchBank,
    noise_bank: Mapping[str, np.ndarray],
    workers: int = 1,
) -> EvalReport:
    """
    WER of one model under one test corruption setting.

    Args:
        model: Trained model
        model_name: Row label in the reports
        clips: Clean test clips
        condition: Visual type, SNR and audio mode
        bundle: Resolved configs (corruption ranges and decoding)
        lm: Language model for shallow fusion
        seed: Base test seed
        patches: Occluder bank
        noise_bank: Babble bank
        workers: Parallel clips

    Returns:
        EvalReport with per-clip rows
    """
    cfg = condition_config(bundle.corruption, condition.visual, condition.snr, condition.audio_mode)
    corrupted = [clip for clip, _ in corrupt_clips(clips, cfg, seed, patches, noise_bank, workers)]
    decoder = BeamSearchDecoder(bundle.decode, model.vocab, lm)
    rows = decode_clips(model, decoder, corrupted, workers)
    score = corpus_wer((r.reference, r.hypothesis) for r in rows)
    log_eval_condition(model_name, condition.visual, condition.snr_label, score, len(rows))
    return EvalReport(model=model_name, condition=condition, wer=score, n_utts=len(rows), rows=rows)


def write_grid_tables(reports: Sequence[EvalReport], out_dir: Path, seed: int, cfg_hash: str) -> Tuple[Path, Path]:
    """
    Write the grid as a model x condition table and as one row per cell.

    The table has one row per (model, visual, audio_mode) and one column per
    audio SNR, clean first; cells a condition list does not cover stay empty.
    """
    out_dir = Path(out_dir)
    groups: Dict[Tuple[str, str, str], Dict[str, float]] = {}
    for report in reports:
        c = report.condition
        groups.setdefault((report.model, c.visual, c.audio_mode), {})[c.snr_label] = report.wer

    table_path = out_dir / "grid_table.csv"
    table_rows = [
        [model, visual, mode] + [cells.get(col, "") for col in TABLE_HEADER[3:]]
        for (model, visual, mode), cells in groups.items()
    ]
    write_csv(table_path, TABLE_HEADER, table_rows)
    write_metadata(table_path, seed=seed, config_hash=cfg_hash, created_by="eval-grid")

    long_path = out_dir / "grid_long.csv"
    write_csv(
        long_path,
        LONG_HEADER,
        (
            [r.model, r.condition.visual, r.condition.snr_label, r.condition.audio_mode, r.wer, r.n_utts]
            for r in reports
        ),
    )
    write_metadata(long_path, seed=seed, config_hash=cfg_hash, created_by="eval-grid")
    return table_path, long_path


def run_grid(
    checkpoints: Mapping[str, Path],
    clips: Sequence[SyntheticClip],
    bundle: ConfigBundle,
    lm: Optional[NGramLM] = None,
    conditions: Optional[Sequence[GridCondition]] = None,
    seed: int = 0,
    out_dir: Optional[Path] = None,
    workers: int = 1,
) -> List[EvalReport]:
    """
    Evaluate every checkpoint under every condition on the same seeded test set.

    Args:
        checkpoints: Model label -> checkpoint path
        clips: Clean test clips
        bundle: Resolved configs; decoding settings are shared by all cells
        lm: Optional shallow-fusion language model
        conditions: Grid cells (default: every visual type x clean and grid SNRs)
        seed: Base test seed
        out_dir: When given, the grid CSVs are written there
        workers: Parallel clips per cell

    Returns:
        One EvalReport per (model, condition), in input order
    """
    for name, path in checkpoints.items():
        if not Path(path).exists():
            raise DatasetError(f"Checkpoint for '{name}' not found: {path}")
    if not clips:
        raise DatasetError("Evaluation needs at least one clip")
    conditions = list(conditions) if conditions is not None else default_conditions()
    patches = build_patch_bank(bundle.corruption, seed)
    noise_bank = build_noise_bank(bundle.synthetic, bundle.corruption, seed)

    reports = []
    for name, path in checkpoints.items():
        model = load_model(Path(path))
        logger.info(f"Evaluating '{name}' ({model.cfg.fusion}/{model.cfg.modality}) on {len(conditions)} conditions")
        for condition in conditions:
            reports.append(
                evaluate_condition(model, name, clips, condition, bundle, lm, seed, patches, noise_bank, workers)
            )

    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_grid_tables(reports, Path(out_dir), seed, config_hash(bundle.corruption, bundle.decode))
    return reports
