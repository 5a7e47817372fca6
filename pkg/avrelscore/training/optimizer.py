"""Adam with bias correction, the warmup / inverse-square-root schedule and norm clipping."""

import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from avrelscore.core.config import TrainConfig
from avrelscore.core.exceptions import AVRelScoreError, GradientError
from avrelscore.tensor import Parameter

logger = logging.getLogger(__name__)


class OptimizerState(BaseModel):
    """First and second moments per parameter name, plus the step counter."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)
    step: int = Field(default=0, ge=0)


def lr_schedule(step: int, peak_lr: float, warmup_steps: int) -> float:
    """
    Linear warmup to ``peak_lr`` then decay with the inverse square root of the step.

    Args:
        step: 1-based optimiser step
        peak_lr: Learning rate reached at step == warmup_steps
        warmup_steps: Length of the linear ramp

    Returns:
        Learning rate for this step
    """
    if step < 1:
        raise AVRelScoreError(f"lr_schedule needs step >= 1, got {step}")
    if step <= warmup_steps:
        return peak_lr * step / warmup_steps
    return peak_lr * math.sqrt(warmup_steps / step)


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[Optional[np.ndarray]],
    state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.98,
    eps: float = 1e-9,
) -> OptimizerState:
    """
    One bias-corrected Adam update, in place on ``params`` and ``state``.

    A missing gradient counts as zero. Every gradient is checked before any
    parameter moves.

    Returns:
        The updated state
    """
    if len(params) != len(grads):
        raise AVRelScoreError(f"{len(params)} parameters but {len(grads)} gradients")
    dense = []
    for param, grad in zip(params, grads):
        g = np.zeros_like(param.data) if grad is None else np.asarray(grad, dtype=np.float64)
        if g.shape != param.shape:
            raise GradientError(param.name, f"Gradient shape {g.shape} differs from parameter {param.shape}")
        if not np.all(np.isfinite(g)):
            raise GradientError(param.name)
        dense.append(g)

    state.step += 1
    c1 = 1.0 - beta1 ** state.step
    c2 = 1.0 - beta2 ** state.step
    for param, g in zip(params, dense):
        m = state.m.get(param.name)
        v = state.v.get(param.name)
        m = (1.0 - beta1) * g if m is None else beta1 * m + (1.0 - beta1) * g
        v = (1.0 - beta2) * g * g if v is None else beta2 * v + (1.0 - beta2) * g * g
        state.m[param.name] = m
        state.v[param.name] = v
        param.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


def clip_grad_norm(params: Sequence[Parameter], max_norm: float) -> float:
    """Scale gradients so their global L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    total = math.sqrt(sum(float(np.sum(p.grad ** 2)) for p in params if p.grad is not None))
    if total > max_norm:
        factor = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * factor
    return total


class Adam:
    """Optimiser bound to one parameter set and a TrainConfig."""

    def __init__(self, params: Sequence[Parameter], cfg: TrainConfig):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names) or not all(names):
            raise AVRelScoreError("Optimiser parameters need unique non-empty names")
        self.cfg = cfg
        self.state = OptimizerState()

    def current_lr(self) -> float:
        return lr_schedule(self.state.step + 1, self.cfg.peak_lr, self.cfg.warmup_steps)

    def step(self) -> float:
        """Clip, update, and return the learning rate that was used."""
        clip_grad_norm(self.params, self.cfg.grad_clip)
        lr = self.current_lr()
        adam_step(
            self.params,
            [p.grad for p in self.params],
            self.state,
            lr,
            beta1=self.cfg.beta1,
            beta2=self.cfg.beta2,
            eps=self.cfg.epsilon,
        )
        return lr

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
