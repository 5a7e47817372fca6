"""Finite-difference checks of every catalog op and of the full training loss."""

import logging
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from avrelscore.core.artifacts import derive_seed
from avrelscore.core.config import ModelConfig
from avrelscore.corruption.views import AudioClip, Rect, VideoClip
from avrelscore.model.network import AVRelScoreModel
from avrelscore.tensor import CATALOG, Tensor, grad_check_parameters, op_apply, ops
from avrelscore.training.losses import attention_loss, ctc_loss, joint_loss

logger = logging.getLogger(__name__)

Case = Tuple[List[Tensor], Dict]


def _t(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _away_from_zero(rng: np.random.Generator, *shape: int) -> Tensor:
    x = rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return Tensor(x, requires_grad=True)


OP_CASES: Dict[str, Callable[[np.random.Generator], Case]] = {
    "add": lambda r: ([_t(r, 3, 4), _t(r, 1, 4)], {}),
    "sub": lambda r: ([_t(r, 3, 4), _t(r, 3, 1)], {}),
    "hadamard": lambda r: ([_t(r, 3, 4), _t(r, 3, 4)], {}),
    "scale": lambda r: ([_t(r, 2, 3)], {"factor": -1.7}),
    "matmul": lambda r: ([_t(r, 3, 4), _t(r, 4, 2)], {}),
    "concat": lambda r: ([_t(r, 2, 3), _t(r, 1, 3)], {"axis": 0}),
    "slice": lambda r: ([_t(r, 5, 3)], {"axis": 0, "start": 1, "stop": 4}),
    "transpose": lambda r: ([_t(r, 2, 3, 4)], {"axes": (2, 0, 1)}),
    "reshape": lambda r: ([_t(r, 2, 6)], {"shape": (3, 4)}),
    "sum": lambda r: ([_t(r, 3, 4)], {"axis": 1}),
    "mean": lambda r: ([_t(r, 3, 4)], {"axis": 0, "keepdims": True}),
    "sigmoid": lambda r: ([_t(r, 3, 4, low=-3.0, high=3.0)], {}),
    "relu": lambda r: ([_away_from_zero(r, 3, 4)], {}),
    "swish": lambda r: ([_t(r, 3, 4, low=-3.0, high=3.0)], {}),
    "log": lambda r: ([_t(r, 3, 4, low=0.5, high=2.0)], {}),
    "softmax": lambda r: ([_t(r, 3, 5)], {"axis": -1}),
    "log_softmax": lambda r: ([_t(r, 3, 5)], {"axis": -1}),
    "layer_norm": lambda r: ([_t(r, 4, 6), _t(r, 6), _t(r, 6)], {}),
    "batch_norm": lambda r: (
        [_t(r, 5, 3), _t(r, 3), _t(r, 3)],
        {"running_mean": np.zeros(3), "running_var": np.ones(3), "training": True},
    ),
    "conv1d": lambda r: ([_t(r, 7, 4), _t(r, 4, 2, 3), _t(r, 4)], {"stride": 2, "padding": 1, "groups": 2}),
    "conv2d": lambda r: ([_t(r, 2, 2, 5, 5), _t(r, 3, 2, 3, 3), _t(r, 3)], {"stride": 2, "padding": 1}),
    "scaled_dot_product_attention": lambda r: (
        [_t(r, 3, 4), _t(r, 5, 4), _t(r, 5, 4), _t(r, 2, 3, 5)],
        {"heads": 2},
    ),
    "positional_encoding": lambda r: ([_t(r, 4, 6)], {"offset": 2}),
    "embedding_lookup": lambda r: ([_t(r, 5, 3)], {"ids": [4, 0, 4, 2]}),
}


def check_op(name: str, seed: int = 0, eps: float = 1e-6) -> float:
    """Worst relative error of one op's gradient w.r.t. every input, under a random linear read-out."""
    rng = np.random.default_rng(derive_seed(seed, "gradcheck", name, domain="init"))
    inputs, attrs = OP_CASES[name](rng)
    for i, t in enumerate(inputs):
        t.name = f"{name}.input{i}"
    sample = op_apply(name, inputs, attrs)
    weights = Tensor(rng.standard_normal(sample.shape))

    def loss() -> Tensor:
        return ops.sum(ops.hadamard(op_apply(name, inputs, attrs), weights))

    return grad_check_parameters(loss, inputs, eps)


def catalog_gradient_check(seed: int = 0, eps: float = 1e-6) -> Dict[str, float]:
    """Relative error per registered op; ops without a check case are reported as missing."""
    names = CATALOG.get_op_names()
    missing = sorted(set(names) - set(OP_CASES))
    if missing:
        logger.warning(f"No gradient check case for ops {missing}")
    return {name: check_op(name, seed, eps) for name in sorted(names) if name in OP_CASES}


def tiny_model_config(cfg: ModelConfig) -> ModelConfig:
    """Shrink widths and depths while keeping the input geometry and variant."""
    return cfg.model_copy(update={
        "d_model": 8,
        "ff_dim": 16,
        "enc_layers": 1,
        "dec_layers": 1,
        "heads": 2,
        "conv_kernel": 3,
        "visual_channels": [2],
        "audio_channels": [2] * len(cfg.audio_channels),
        "rel_pos_max": 4,
    })


def toy_instance(cfg: ModelConfig, seed: int, frames: int = 4) -> Tuple[VideoClip, AudioClip]:
    rng = np.random.default_rng(derive_seed(seed, "gradcheck", "instance", domain="init"))
    video = VideoClip(
        frames=rng.uniform(0.0, 1.0, size=(frames, cfg.frame_height, cfg.frame_width, 1)),
        mouth_region=Rect(top=0, left=0, height=cfg.frame_height, width=cfg.frame_width),
    )
    audio = AudioClip(samples=rng.standard_normal(frames * cfg.samples_per_frame))
    return video, audio


def offset_zero_parameters(model: AVRelScoreModel, rng: np.random.Generator, scale: float = 0.1) -> List[str]:
    """
    Redraw every all-zero parameter tensor uniformly in [-scale, scale].

    Biases and batch-norm shifts start at zero. A stream the front-end maps to
    a constant then leaves the scorer's normalised activations at exactly zero,
    which puts the following ReLU on its kink where finite differences and the
    analytic gradient disagree.
    """
    moved = []
    for name, param in model.named_parameters():
        if not param.data.any():
            param.data[...] = rng.uniform(-scale, scale, size=param.shape)
            moved.append(name)
    return moved


def model_gradient_check(
    cfg: ModelConfig,
    seed: int = 0,
    lam: float = 0.5,
    tokens: Sequence[int] = (3, 4),
    max_coords: int = 2,
    eps: float = 1e-6,
) -> float:
    """
    Check the joint loss of a 4-frame, 2-token instance against every parameter.

    Args:
        cfg: Model config
        seed: Seed for initialisation, inputs and coordinate sampling
        lam: Attention weight of the joint loss
        tokens: Target word ids
        max_coords: Coordinates sampled per parameter tensor
        eps: Finite-difference step

    Returns:
        Worst relative error
    """
    model = AVRelScoreModel(cfg, seed=seed)
    model.train()
    offset_zero_parameters(model, np.random.default_rng(derive_seed(seed, "gradcheck", "offsets", domain="init")))
    video, audio = toy_instance(cfg, seed)
    labels = list(tokens)
    vocab = model.vocab

    def loss() -> Tensor:
        out = model(video, audio, [vocab.sos] + labels)
        return joint_loss(attention_loss(out.att_logits, labels + [vocab.eos]), ctc_loss(out.ctc_logits, labels), lam)

    rng = np.random.default_rng(derive_seed(seed, "gradcheck", "coords", domain="init"))
    params = list(model.parameters())
    worst = grad_check_parameters(loss, params, eps=eps, max_coords=max_coords, rng=rng)
    logger.info(f"Model gradient check over {len(params)} parameter tensors: {worst:.3e}")
    return worst
