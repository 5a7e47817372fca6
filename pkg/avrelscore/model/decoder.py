"""Transformer attention decoder."""

import logging
from typing import List, Sequence

import numpy as np

from avrelscore.core.config import ModelConfig
from avrelscore.core.exceptions import VocabularyError
from avrelscore.model.conformer import FeedForward
from avrelscore.model.views import SOS
from avrelscore.tensor import Embedding, LayerNorm, Linear, Module, Tensor, ops

logger = logging.getLogger(__name__)


def causal_mask(length: int) -> np.ndarray:
    return np.tril(np.ones((length, length), dtype=bool))


class MultiHeadAttention(Module):
    def __init__(self, d_model: int, heads: int, rng: np.random.Generator):
        super().__init__()
        self.heads = heads
        self.wq = Linear(d_model, d_model, rng)
        self.wk = Linear(d_model, d_model, rng)
        self.wv = Linear(d_model, d_model, rng)
        self.wo = Linear(d_model, d_model, rng)

    def __call__(self, query: Tensor, key_value: Tensor, mask=None) -> Tensor:
        out = ops.scaled_dot_product_attention(
            self.wq(query),
            self.wk(key_value),
            self.wv(key_value),
            heads=self.heads,
            mask=mask,
        )
        return self.wo(out)


class DecoderLayer(Module):
    """Pre-norm masked self-attention, cross-attention and feed-forward, each residual."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.self_norm = LayerNorm(cfg.d_model, rng)
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.heads, rng)
        self.cross_norm = LayerNorm(cfg.d_model, rng)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.heads, rng)
        self.ff = FeedForward(cfg.d_model, cfg.ff_dim, rng)

    def __call__(self, y: Tensor, memory: Tensor) -> Tensor:
        h = self.self_norm(y)
        y = ops.add(y, self.self_attn(h, h, mask=causal_mask(y.shape[0])))
        y = ops.add(y, self.cross_attn(self.cross_norm(y), memory))
        return ops.add(y, self.ff(y))


class TransformerDecoder(Module):
    """
    Token embedding with sinusoidal positions, dec_layers decoder layers, final
    LayerNorm and a linear output layer over the full vocabulary.
    """

    def __init__(self, cfg: ModelConfig, vocab_size: int, rng: np.random.Generator):
        super().__init__()
        self.vocab_size = vocab_size
        self.embed = Embedding(vocab_size, cfg.d_model, rng)
        self.layers: List[DecoderLayer] = []
        for i in range(cfg.dec_layers):
            layer = DecoderLayer(cfg, rng)
            setattr(self, f"layer{i}", layer)
            self.layers.append(layer)
        self.norm = LayerNorm(cfg.d_model, rng)
        self.out = Linear(cfg.d_model, vocab_size, rng)

    def __call__(self, memory: Tensor, y_in: Sequence[int]) -> Tensor:
        """
        Next-token logits for each input position.

        Args:
            memory: Encoder output [T x D]
            y_in: Teacher-forced tokens starting with sos

        Returns:
            Logits [J x vocab]
        """
        ids = [int(i) for i in y_in]
        if not ids or ids[0] != SOS:
            raise VocabularyError("Decoder input must begin with sos")
        bad = [i for i in ids if not 0 <= i < self.vocab_size]
        if bad:
            raise VocabularyError(f"Decoder tokens {bad} outside vocabulary of {self.vocab_size}")
        y = ops.positional_encoding(self.embed(ids))
        for layer in self.layers:
            y = layer(y, memory)
        return self.out(self.norm(y))
