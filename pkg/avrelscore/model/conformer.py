"""Conformer encoder blocks with relative-position self-attention."""

import logging
from typing import List

import numpy as np

from avrelscore.core.config import ModelConfig
from avrelscore.tensor import BatchNorm1d, Conv1d, Embedding, LayerNorm, Linear, Module, Tensor, ops

logger = logging.getLogger(__name__)


class FeedForward(Module):
    """LayerNorm -> Linear(D, ff) -> swish -> Linear(ff, D)."""

    def __init__(self, d_model: int, ff_dim: int, rng: np.random.Generator):
        super().__init__()
        self.norm = LayerNorm(d_model, rng)
        self.w1 = Linear(d_model, ff_dim, rng)
        self.w2 = Linear(ff_dim, d_model, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.w2(ops.swish(self.w1(self.norm(x))))


def relative_distance_ids(t_q: int, t_k: int, max_distance: int) -> np.ndarray:
    """Row-major [Tq*Tk] indices of clip(j - i, -max, max) + max."""
    rel = np.arange(t_k)[None, :] - np.arange(t_q)[:, None]
    return (np.clip(rel, -max_distance, max_distance) + max_distance).reshape(-1)


class RelPositionSelfAttention(Module):
    """
    Multi-head self-attention with a learned per-head bias indexed by the
    clipped relative distance between query and key positions.
    """

    def __init__(self, d_model: int, heads: int, max_distance: int, rng: np.random.Generator):
        super().__init__()
        self.heads = heads
        self.max_distance = max_distance
        self.norm = LayerNorm(d_model, rng)
        self.wq = Linear(d_model, d_model, rng)
        self.wk = Linear(d_model, d_model, rng)
        self.wv = Linear(d_model, d_model, rng)
        self.wo = Linear(d_model, d_model, rng)
        self.rel_bias = Embedding(2 * max_distance + 1, heads, rng)

    def position_bias(self, length: int) -> Tensor:
        ids = relative_distance_ids(length, length, self.max_distance)
        table = self.rel_bias(ids)
        return ops.transpose(ops.reshape(table, shape=(length, length, self.heads)), axes=(2, 0, 1))

    def __call__(self, x: Tensor) -> Tensor:
        h = self.norm(x)
        out = ops.scaled_dot_product_attention(
            self.wq(h),
            self.wk(h),
            self.wv(h),
            self.position_bias(x.shape[0]),
            heads=self.heads,
        )
        return self.wo(out)


class ConvModule(Module):
    """Pointwise -> GLU -> depthwise conv -> batch norm -> swish -> pointwise."""

    def __init__(self, d_model: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        self.d_model = d_model
        self.norm = LayerNorm(d_model, rng)
        self.pointwise_in = Linear(d_model, 2 * d_model, rng)
        self.depthwise = Conv1d(d_model, d_model, kernel, rng, padding=kernel // 2, groups=d_model)
        self.bn = BatchNorm1d(d_model, rng)
        self.pointwise_out = Linear(d_model, d_model, rng)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.pointwise_in(self.norm(x))
        value = ops.slice(h, axis=1, start=0, stop=self.d_model)
        gate = ops.slice(h, axis=1, start=self.d_model, stop=2 * self.d_model)
        h = ops.hadamard(value, ops.sigmoid(gate))
        h = ops.swish(self.bn(self.depthwise(h)))
        return self.pointwise_out(h)


class ConformerBlock(Module):
    """
    x + FF/2, + MHSA, + Conv, + FF/2, then LayerNorm.

    Setting ``self_attention_enabled`` to False bypasses the attention
    sublayer; the block is then local in time.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.ff1 = FeedForward(cfg.d_model, cfg.ff_dim, rng)
        self.mhsa = RelPositionSelfAttention(cfg.d_model, cfg.heads, cfg.rel_pos_max, rng)
        self.conv = ConvModule(cfg.d_model, cfg.conv_kernel, rng)
        self.ff2 = FeedForward(cfg.d_model, cfg.ff_dim, rng)
        self.final_norm = LayerNorm(cfg.d_model, rng)
        self.self_attention_enabled = True

    def __call__(self, x: Tensor) -> Tensor:
        x = ops.add(x, ops.scale(self.ff1(x), factor=0.5))
        if self.self_attention_enabled:
            x = ops.add(x, self.mhsa(x))
        x = ops.add(x, self.conv(x))
        x = ops.add(x, ops.scale(self.ff2(x), factor=0.5))
        return self.final_norm(x)


class ConformerEncoder(Module):
    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.blocks: List[ConformerBlock] = []
        for i in range(cfg.enc_layers):
            block = ConformerBlock(cfg, rng)
            setattr(self, f"block{i}", block)
            self.blocks.append(block)

    def set_self_attention(self, enabled: bool) -> None:
        for block in self.blocks:
            block.self_attention_enabled = enabled

    def __call__(self, x: Tensor) -> Tensor:
        for block in self.blocks:
            x = block(x)
        return x
