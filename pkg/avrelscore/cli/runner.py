"""Command-line entry point for the avrelscore toolkit."""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from avrelscore.core.artifacts import write_metadata
from avrelscore.core.config import TOOL_VERSION, ConfigBundle, RunConfig, config_hash
from avrelscore.core.exceptions import AVRelScoreError, ConfigError, GradientError
from avrelscore.core.logging import setup_logging
from avrelscore.corruption.patches import build_patch_bank
from avrelscore.corruption.plan_io import load_plans
from avrelscore.corruption.scheduler import condition_config
from avrelscore.data.manifest import load_clips, load_manifest
from avrelscore.data.media import dump_pgm
from avrelscore.data.synthetic import build_noise_bank, generate_dataset
from avrelscore.decoding.beam_search import BeamSearchDecoder
from avrelscore.decoding.lm import NGramLM, train_ngram_lm
from avrelscore.evaluation.experiments import VARIANTS, compare_variants
from avrelscore.evaluation.grid import decode_clips, run_grid, write_decode_records
from avrelscore.evaluation.reliability_export import export_reliability, reliability_contrast
from avrelscore.evaluation.testset import PLANS_NAME, corrupt_dataset
from avrelscore.evaluation.views import default_conditions
from avrelscore.evaluation.wer import corpus_wer
from avrelscore.model.network import load_model
from avrelscore.model.views import Vocabulary
from avrelscore.training.diagnostics import catalog_gradient_check, model_gradient_check, tiny_model_config
from avrelscore.training.trainer import train as run_training

console = Console()
err_console = Console(stderr=True)

GRADCHECK_TOLERANCE = 1e-4
VISUAL_CHOICES = ["clean", "occlusion", "noise", "both"]


def setup_cli_logging(verbose: bool, run: RunConfig) -> None:
    """Set up logging for CLI."""
    level = "DEBUG" if verbose else run.log_level
    handler = None
    if not run.json_logs:
        handler = RichHandler(console=err_console, rich_tracebacks=True, show_time=False)
    setup_logging(level, run.log_file, run.json_logs, console_handler=handler)


def error_line(error: Exception) -> str:
    """Machine-readable one-line error report."""
    parts = [f"error kind={type(error).__name__}"]
    if isinstance(error, ConfigError):
        parts.append(f"key={error.key}")
    message = error.message if isinstance(error, AVRelScoreError) else str(error)
    parts.append(f"message={json.dumps(message)}")
    return " ".join(parts)


def handle_errors(func):
    """Map toolkit and I/O failures to exit status 1 with an error line."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (AVRelScoreError, OSError) as e:
            click.echo(error_line(e), err=True)
            logging.getLogger(__name__).debug("Command failed", exc_info=True)
            sys.exit(1)

    return wrapper


def common_options(func):
    """Options shared by every subcommand."""
    options = [
        click.option("--config", "-c", "config_paths", multiple=True, type=click.Path(dir_okay=False),
                     help="key = value config file (repeatable; later files win)"),
        click.option("--seed", type=int, default=None, help="Base seed, echoed into every artifact"),
        click.option("--out", "-o", "out_dir", default="./runs", show_default=True, help="Output directory"),
        click.option("--workers", type=int, default=None, help="Parallel clips (default: $AVREL_THREADS or 1)"),
        click.option("--set", "set_values", multiple=True, metavar="KEY=VALUE",
                     help="Override any config key (repeatable)"),
        click.option("--verbose", "-v", is_flag=True, help="Verbose output"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def parse_set_values(values: Sequence[str]) -> Dict[str, str]:
    parsed = {}
    for item in values:
        if "=" not in item:
            raise click.BadParameter(f"expected KEY=VALUE, got '{item}'", param_hint="--set")
        key, value = item.split("=", 1)
        parsed[key.strip()] = value.strip()
    return parsed


def prepare(
    subcommand: str,
    config_paths: Sequence[str],
    seed: Optional[int],
    out_dir: str,
    workers: Optional[int],
    set_values: Sequence[str],
    verbose: bool,
    **flags: Any,
) -> Tuple[RunConfig, ConfigBundle]:
    """
    Resolve run settings and configs: defaults < env < files < flags.

    Returns:
        (run settings with the output directory created, config bundle)
    """
    env = RunConfig.from_env()
    overrides: Dict[str, Any] = parse_set_values(set_values)
    overrides.update({k: v for k, v in flags.items() if v is not None})
    if seed is not None:
        overrides["seed"] = seed
    bundle = ConfigBundle.load(list(config_paths), overrides)
    run = env.model_copy(update={
        "subcommand": subcommand,
        "config_paths": list(config_paths),
        "seed": bundle.train.seed,
        "out_dir": out_dir,
        "workers": workers if workers is not None else env.workers,
    })
    setup_cli_logging(verbose, run)
    run.ensure_out_dir()
    return run, bundle


def summary(text: str) -> None:
    console.print(text, highlight=False, markup=False)


def load_corpus(manifest_path: str):
    manifest, root = load_manifest(Path(manifest_path))
    return manifest, root, load_clips(manifest, root)


@click.group()
@click.version_option(version=TOOL_VERSION)
def cli():
    """Audio-visual speech recognition with reliability scoring, at desk scale."""
    pass


@cli.command("gen-data")
@common_options
@click.option("--n-clips", type=int, default=32, show_default=True, help="Number of clips")
@click.option("--split", default="train", show_default=True, help="Clip id prefix and seed component")
@handle_errors
def gen_data(config_paths, seed, out_dir, workers, set_values, verbose, n_clips, split):
    """Generate a synthetic paired audio-visual corpus."""
    run, bundle = prepare("gen-data", config_paths, seed, out_dir, workers, set_values, verbose)
    manifest = generate_dataset(bundle.synthetic, n_clips, Path(run.out_dir), split, run.workers)
    frames = sum(e.num_frames for e in manifest.entries)
    summary(f"gen-data: {len(manifest.entries)} '{split}' clips ({frames} frames) -> {run.out_dir} seed={bundle.synthetic.seed}")


@cli.command()
@common_options
@click.option("--manifest", "manifest_path", required=True, help="Clean corpus manifest or directory")
@click.option("--visual-corruption", type=click.Choice(VISUAL_CHOICES), default=None,
              help="Force one visual condition instead of the configured probabilities")
@click.option("--snr", type=float, default=None, help="Force babble at this SNR (dB)")
@click.option("--audio-mode", type=click.Choice(["chunks", "full"]), default="chunks", show_default=True)
@click.option("--dump-frames", is_flag=True, help="Also write every corrupted frame as PGM under frames/")
@handle_errors
def corrupt(config_paths, seed, out_dir, workers, set_values, verbose, manifest_path, visual_corruption, snr, audio_mode,
            dump_frames):
    """Write a seeded corrupted copy of a corpus together with its plans."""
    run, bundle = prepare("corrupt", config_paths, seed, out_dir, workers, set_values, verbose)
    _, _, clips = load_corpus(manifest_path)
    cfg = bundle.corruption
    if visual_corruption is not None or snr is not None:
        cfg = condition_config(cfg, visual_corruption or "clean", snr, audio_mode)
    patches = build_patch_bank(bundle.corruption, run.seed)
    noise_bank = build_noise_bank(bundle.synthetic, bundle.corruption, run.seed)
    manifest, plans = corrupt_dataset(clips, cfg, run.seed, patches, noise_bank, Path(run.out_dir), run.workers)
    if dump_frames:
        for clip in load_clips(manifest, Path(run.out_dir)):
            dump_pgm(clip.video.frames, Path(run.out_dir) / "frames" / clip.clip_id)
    touched = sum(1 for p in plans.values() if not p.is_empty)
    summary(f"corrupt: {touched}/{len(plans)} clips corrupted -> {run.out_dir} seed={run.seed}")


@cli.command()
@common_options
@click.option("--manifest", "manifest_path", required=True, help="Training corpus manifest or directory")
@click.option("--stage-frames", default=None, help="Curriculum length caps, e.g. 10,20")
@click.option("--epochs", default=None, help="Epochs per stage, e.g. 5,5")
@click.option("--lambda", "lam", type=float, default=None, help="Attention weight of the joint loss")
@click.option("--fusion", type=click.Choice(["relscore", "attention", "linear"]), default=None)
@click.option("--modality", type=click.Choice(["av", "audio", "visual"]), default=None)
@handle_errors
def train(config_paths, seed, out_dir, workers, set_values, verbose, manifest_path, stage_frames, epochs, lam, fusion, modality):
    """Train a model through the curriculum with on-the-fly corruption."""
    run, bundle = prepare(
        "train", config_paths, seed, out_dir, workers, set_values, verbose,
        stage_frames=stage_frames, stage_epochs=epochs, fusion=fusion, modality=modality,
        **{"lambda": lam},
    )
    _, _, clips = load_corpus(manifest_path)
    result = run_training(clips, bundle, Path(run.out_dir))
    last = result.history[-1]
    summary(
        f"train: {len(result.checkpoints)} stages, {last.step} steps, final l_joint={last.l_joint:.4f} "
        f"-> {result.final_checkpoint} seed={run.seed}"
    )


def _decode_config_flags(beam_width, alpha, beta) -> Dict[str, Any]:
    return {"beam_width": beam_width, "alpha": alpha, "beta": beta}


def decode_options(func):
    options = [
        click.option("--beam-width", type=int, default=None),
        click.option("--alpha", type=float, default=None, help="Attention weight; CTC gets 1-alpha"),
        click.option("--beta", type=float, default=None, help="Language model weight"),
        click.option("--lm", "lm_path", default=None, help="n-gram LM written by lm-train"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def load_lm(lm_path: Optional[str]):
    if lm_path is None:
        return None
    return NGramLM.load(Path(lm_path))


@cli.command()
@common_options
@click.option("--checkpoint", required=True, help="Model checkpoint (.avrt)")
@click.option("--manifest", "manifest_path", required=True, help="Corpus to decode")
@decode_options
@handle_errors
def decode(config_paths, seed, out_dir, workers, set_values, verbose, checkpoint, manifest_path, beam_width, alpha, beta, lm_path):
    """Beam-search decode a corpus and write per-clip JSON lines."""
    run, bundle = prepare(
        "decode", config_paths, seed, out_dir, workers, set_values, verbose,
        **_decode_config_flags(beam_width, alpha, beta),
    )
    model = load_model(Path(checkpoint))
    _, _, clips = load_corpus(manifest_path)
    decoder = BeamSearchDecoder(bundle.decode, model.vocab, load_lm(lm_path))
    rows = decode_clips(model, decoder, clips, run.workers)
    path = write_decode_records(
        Path(run.out_dir) / "decode.jsonl", rows, run.seed, config_hash(bundle.decode, model.cfg),
        checkpoint=str(checkpoint),
    )
    score = corpus_wer((r.reference, r.hypothesis) for r in rows)
    summary(f"decode: {len(rows)} clips, WER {score:.2f}% -> {path} seed={run.seed}")


def parse_checkpoints(values: Sequence[str]) -> Dict[str, Path]:
    checkpoints: Dict[str, Path] = {}
    for item in values:
        name, _, path = item.rpartition("=")
        path = Path(path)
        checkpoints[name or path.stem] = path
    return checkpoints


@cli.command("eval-grid")
@common_options
@click.option("--checkpoint", "checkpoint_specs", multiple=True, required=True, metavar="[NAME=]PATH",
              help="Checkpoint to evaluate (repeatable)")
@click.option("--manifest", "manifest_path", required=True, help="Clean test corpus")
@click.option("--visual-corruption", type=click.Choice(VISUAL_CHOICES), default=None,
              help="Restrict the grid to one visual condition")
@click.option("--snr", type=float, default=None, help="Restrict the grid to one SNR")
@decode_options
@handle_errors
def eval_grid(config_paths, seed, out_dir, workers, set_values, verbose, checkpoint_specs, manifest_path,
              visual_corruption, snr, beam_width, alpha, beta, lm_path):
    """Evaluate checkpoints over the visual corruption x SNR grid."""
    run, bundle = prepare(
        "eval-grid", config_paths, seed, out_dir, workers, set_values, verbose,
        **_decode_config_flags(beam_width, alpha, beta),
    )
    conditions = [
        c for c in default_conditions()
        if (visual_corruption is None or c.visual == visual_corruption) and (snr is None or c.snr == snr)
    ]
    if not conditions:
        raise ConfigError("snr", f"No grid condition matches snr={snr}")
    _, _, clips = load_corpus(manifest_path)
    reports = run_grid(
        parse_checkpoints(checkpoint_specs), clips, bundle, load_lm(lm_path), conditions,
        seed=run.seed, out_dir=Path(run.out_dir), workers=run.workers,
    )
    if verbose:
        table = Table(title="WER (%)", border_style="blue")
        for column in ("model", "condition", "WER"):
            table.add_column(column)
        for r in reports:
            table.add_row(r.model, r.condition.label, f"{r.wer:.2f}")
        console.print(table)
    summary(f"eval-grid: {len(reports)} cells -> {Path(run.out_dir) / 'grid_table.csv'} seed={run.seed}")


@cli.command()
@common_options
@click.option("--train-manifest", required=True, help="Clean training corpus")
@click.option("--test-manifest", required=True, help="Clean test corpus")
@click.option("--seeds", default="0,1,2,3", show_default=True, help="Comma-separated run seeds")
@decode_options
@handle_errors
def trend(config_paths, seed, out_dir, workers, set_values, verbose, train_manifest, test_manifest, seeds,
          beam_width, alpha, beta, lm_path):
    """Train every variant per seed and compare them under noise and on clean input."""
    run, bundle = prepare(
        "trend", config_paths, seed, out_dir, workers, set_values, verbose,
        **_decode_config_flags(beam_width, alpha, beta),
    )
    try:
        seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigError("seeds", f"Seeds must be comma-separated integers, got '{seeds}'") from e
    if not seed_list:
        raise ConfigError("seeds", "At least one seed is required")
    _, _, train_clips = load_corpus(train_manifest)
    _, _, test_clips = load_corpus(test_manifest)
    report = compare_variants(
        train_clips, test_clips, bundle, seed_list, Path(run.out_dir), lm=load_lm(lm_path), workers=run.workers,
    )
    if verbose:
        table = Table(title="WER (%) at -5 dB with occlusion and visual noise", border_style="blue")
        for column in ("seed", *VARIANTS, "visual gap", "audio gap"):
            table.add_column(column)
        for o in report.outcomes:
            table.add_row(
                str(o.seed),
                *(f"{o.noisy_wer[v]:.2f}" for v in VARIANTS),
                f"{o.contrast.visual_gap:.4f}",
                f"{o.contrast.audio_gap:.4f}",
            )
        console.print(table)
    summary(
        f"trend: relscore won {report.wins}/{len(report.outcomes)} seeds "
        f"-> {Path(run.out_dir) / 'trend.json'} seed={run.seed}"
    )


@cli.command("export-rel")
@common_options
@click.option("--checkpoint", required=True, help="Model checkpoint (.avrt) with reliability scorers")
@click.option("--manifest", "manifest_path", required=True, help="Corrupted corpus written by 'corrupt'")
@click.option("--plans", "plans_path", default=None, help="Plan file (default: plans.jsonl next to the manifest)")
@handle_errors
def export_rel(config_paths, seed, out_dir, workers, set_values, verbose, checkpoint, manifest_path, plans_path):
    """Export per-frame reliability scores aligned with corruption flags."""
    run, bundle = prepare("export-rel", config_paths, seed, out_dir, workers, set_values, verbose)
    model = load_model(Path(checkpoint))
    _, root, clips = load_corpus(manifest_path)
    plans = load_plans(Path(plans_path) if plans_path else root / PLANS_NAME)
    path = Path(run.out_dir) / "reliability.csv"
    rows = export_reliability(model, clips, plans, path, seed=run.seed, checkpoint=Path(checkpoint))
    contrast = reliability_contrast(rows)
    summary(
        f"export-rel: {len(rows)} frames, s_v gap {contrast.visual_gap:.4f}, s_a gap {contrast.audio_gap:.4f} "
        f"-> {path} seed={run.seed}"
    )


@cli.command()
@common_options
@click.option("--max-coords", type=int, default=2, show_default=True, help="Coordinates sampled per model parameter")
@handle_errors
def gradcheck(config_paths, seed, out_dir, workers, set_values, verbose, max_coords):
    """Finite-difference check of every op and of the joint loss on a tiny model."""
    run, bundle = prepare("gradcheck", config_paths, seed, out_dir, workers, set_values, verbose)
    op_errors = catalog_gradient_check(run.seed)
    model_error = model_gradient_check(
        tiny_model_config(bundle.model), seed=run.seed, lam=bundle.train.lambda_, max_coords=max_coords
    )
    worst = max([model_error, *op_errors.values()])
    path = Path(run.out_dir) / "gradcheck.json"
    path.write_text(
        json.dumps({"ops": op_errors, "model": model_error, "max_rel_error": worst}, sort_keys=True, indent=1),
        encoding="utf-8",
    )
    write_metadata(path, seed=run.seed, config_hash=config_hash(bundle.model), created_by="gradcheck")
    summary(f"gradcheck: max relative error {worst:.3e} over {len(op_errors)} ops and the model loss")
    if worst >= GRADCHECK_TOLERANCE:
        raise GradientError("gradcheck", f"max relative error {worst:.3e} >= {GRADCHECK_TOLERANCE:g}")


@cli.command("lm-train")
@common_options
@click.option("--manifest", "manifest_path", required=True, help="Corpus whose transcripts train the LM")
@click.option("--order", type=int, default=None, help="n-gram order")
@click.option("--add-k", type=float, default=None, help="Add-k smoothing constant")
@handle_errors
def lm_train(config_paths, seed, out_dir, workers, set_values, verbose, manifest_path, order, add_k):
    """Train the n-gram language model used for shallow fusion."""
    run, bundle = prepare(
        "lm-train", config_paths, seed, out_dir, workers, set_values, verbose,
        lm_order=order, lm_add_k=add_k,
    )
    manifest, _ = load_manifest(Path(manifest_path))
    vocab = Vocabulary.of_size(bundle.model.vocab_size)
    lm = train_ngram_lm(
        [e.transcript for e in manifest.entries], bundle.decode.lm_order, bundle.decode.lm_add_k, vocab
    )
    path = lm.save(Path(run.out_dir) / "lm.json", seed=run.seed, config_hash=config_hash(bundle.decode))
    summary(f"lm-train: order-{lm.order} LM on {len(manifest.entries)} transcripts -> {path} seed={run.seed}")


def main():
    """Main entry point for CLI."""
    cli()


if __name__ == "__main__":
    main()
