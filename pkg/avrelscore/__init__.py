"""
avrelscore
==========

Audio-visual speech recognition that stays robust when either stream is
corrupted: per-frame reliability scores re-weight the audio and visual
features before a joint Conformer encoder fuses them.

Main Components:
- plan_corruption / corrupt_pair: seeded occlusion, blur, pixel noise and babble
- AVRelScoreModel: front-ends, reliability scorers, encoder, CTC head and decoder
- Trainer: curriculum training on the joint CTC/attention objective
- BeamSearchDecoder / NGramLM: joint CTC/attention beam search with shallow fusion
- run_grid: WER over the visual corruption x SNR grid

Quick Start:
    >>> from avrelscore import ConfigBundle, generate_clips, train
    >>> bundle = ConfigBundle.load(["configs/tiny.conf"])
    >>> clips = generate_clips(bundle.synthetic, 16)
    >>> result = train(clips, bundle, "runs/tiny")
"""

__version__ = "1.0.0"

# Lazy imports for better performance
_LAZY_IMPORTS = {
    "ConfigBundle": ("avrelscore.core.config", "ConfigBundle"),
    "plan_corruption": ("avrelscore.corruption.scheduler", "plan_corruption"),
    "corrupt_pair": ("avrelscore.corruption.pipeline", "corrupt_pair"),
    "AVRelScoreModel": ("avrelscore.model.network", "AVRelScoreModel"),
    "load_model": ("avrelscore.model.network", "load_model"),
    "Trainer": ("avrelscore.training.trainer", "Trainer"),
    "train": ("avrelscore.training.trainer", "train"),
    "BeamSearchDecoder": ("avrelscore.decoding.beam_search", "BeamSearchDecoder"),
    "NGramLM": ("avrelscore.decoding.lm", "NGramLM"),
    "generate_clips": ("avrelscore.data.synthetic", "generate_clips"),
    "generate_dataset": ("avrelscore.data.synthetic", "generate_dataset"),
    "run_grid": ("avrelscore.evaluation.grid", "run_grid"),
    "wer": ("avrelscore.evaluation.wer", "wer"),
}


def __getattr__(name: str):
    """Lazy import mechanism for main components."""
    if name in _LAZY_IMPORTS:
        module_path, attr_name = _LAZY_IMPORTS[name]
        from importlib import import_module
        module = import_module(module_path)
        attr = getattr(module, attr_name)
        globals()[name] = attr
        return attr
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


__all__ = [*_LAZY_IMPORTS, "__version__"]
