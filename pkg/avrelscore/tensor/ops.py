"""Differentiable op catalog.

Every op takes input tensors positionally and attributes as keyword-only
arguments, computes its forward value with numpy in float64 and records a tape
node whose backward returns one gradient per input.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from avrelscore.core.exceptions import ShapeError
from avrelscore.tensor.registry import CATALOG
from avrelscore.tensor.tensor import Tensor, make_result, unbroadcast


def _require(cond: bool, op: str, tensors: Sequence[Tensor], reason: str = "shape mismatch") -> None:
    if not cond:
        raise ShapeError(op, [t.shape for t in tensors], reason=reason)


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, [a.shape, b.shape], reason="shapes do not broadcast")


# Elementwise arithmetic

@CATALOG.op("Elementwise sum with broadcasting")
def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return make_result("add", a.data + b.data, (a, b), backward)


@CATALOG.op("Elementwise difference with broadcasting")
def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a, b)

    def backward(g):
        return unbroadcast(g, a.shape), -unbroadcast(g, b.shape)

    return make_result("sub", a.data - b.data, (a, b), backward)


@CATALOG.op("Elementwise (Hadamard) product with broadcasting")
def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("hadamard", a, b)

    def backward(g):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return make_result("hadamard", a.data * b.data, (a, b), backward)


@CATALOG.op("Multiply by a constant")
def scale(a: Tensor, *, factor: float) -> Tensor:
    def backward(g):
        return (g * factor,)

    return make_result("scale", a.data * factor, (a,), backward)


# Linear algebra and layout

@CATALOG.op("Matrix product over the last two axes, batch axes broadcast")
def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require(a.ndim >= 2 and b.ndim >= 2, "matmul", (a, b), "operands need rank >= 2")
    _require(a.shape[-1] == b.shape[-2], "matmul", (a, b), "inner extents differ")
    out = np.matmul(a.data, b.data)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return make_result("matmul", out, (a, b), backward)


@CATALOG.op("Concatenate along an axis", variadic=True)
def concat(tensors: List[Tensor], *, axis: int = 0) -> Tensor:
    _require(len(tensors) >= 1, "concat", tensors, "needs at least one input")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors:
        _require(t.ndim == ndim, "concat", tensors, "ranks differ")
        for ax in range(ndim):
            if ax != axis:
                _require(t.shape[ax] == tensors[0].shape[ax], "concat", tensors, f"extents differ on axis {ax}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return make_result("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


@CATALOG.op("Contiguous slice [start, stop) along an axis")
def slice(x: Tensor, *, axis: int = 0, start: int = 0, stop: Optional[int] = None) -> Tensor:
    axis = axis % x.ndim
    extent = x.shape[axis]
    stop = extent if stop is None else stop
    _require(0 <= start <= stop <= extent, "slice", (x,), f"range [{start},{stop}) outside extent {extent}")
    index = [np.s_[:]] * x.ndim
    index[axis] = np.s_[start:stop]
    index = tuple(index)

    def backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return make_result("slice", x.data[index], (x,), backward)


@CATALOG.op("Permute axes (reverse when axes is None)")
def transpose(x: Tensor, *, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(axes)
    _require(sorted(axes) == list(range(x.ndim)), "transpose", (x,), f"invalid permutation {axes}")
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return make_result("transpose", np.transpose(x.data, axes), (x,), backward)


@CATALOG.op("Reshape to a new shape with the same element count")
def reshape(x: Tensor, *, shape: Sequence[int]) -> Tensor:
    out = x.data.reshape(tuple(shape))

    def backward(g):
        return (g.reshape(x.shape),)

    return make_result("reshape", out, (x,), backward)


# Reductions

@CATALOG.op("Sum over an axis (all elements when axis is None)")
def sum(x: Tensor, *, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_result("sum", out, (x,), backward)


@CATALOG.op("Mean over an axis (all elements when axis is None)")
def mean(x: Tensor, *, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else x.shape[axis]
    out = x.data.mean(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return make_result("mean", out, (x,), backward)


# Nonlinearities

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@CATALOG.op("Logistic sigmoid")
def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)

    def backward(g):
        return (g * s * (1.0 - s),)

    return make_result("sigmoid", s, (x,), backward)


@CATALOG.op("Rectified linear unit")
def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return make_result("relu", np.where(mask, x.data, 0.0), (x,), backward)


@CATALOG.op("Swish: x * sigmoid(x)")
def swish(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)

    def backward(g):
        return (g * (s + x.data * s * (1.0 - s)),)

    return make_result("swish", x.data * s, (x,), backward)


@CATALOG.op("Natural logarithm")
def log(x: Tensor) -> Tensor:
    _require(bool(np.all(x.data > 0)), "log", (x,), "log needs strictly positive inputs")

    def backward(g):
        return (g / x.data,)

    return make_result("log", np.log(x.data), (x,), backward)


@CATALOG.op("Softmax along an axis")
def softmax(x: Tensor, *, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (p * (g - (g * p).sum(axis=axis, keepdims=True)),)

    return make_result("softmax", p, (x,), backward)


@CATALOG.op("Log-softmax along an axis")
def log_softmax(x: Tensor, *, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    p = np.exp(out)

    def backward(g):
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return make_result("log_softmax", out, (x,), backward)


# Normalisation

@CATALOG.op("Layer normalisation over the last axis with affine gain and bias")
def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, *, eps: float = 1e-8) -> Tensor:
    d = x.shape[-1]
    _require(gamma.shape == (d,) and beta.shape == (d,), "layer_norm", (x, gamma, beta))
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def backward(g):
        gxhat = g * gamma.data
        gx = inv * (
            gxhat
            - gxhat.mean(axis=-1, keepdims=True)
            - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True)
        )
        reduce_axes = tuple(range(x.ndim - 1))
        return gx, (g * xhat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)

    return make_result("layer_norm", xhat * gamma.data + beta.data, (x, gamma, beta), backward)


@CATALOG.op("Batch normalisation of [T x C] over axis 0; running stats updated in training")
def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    *,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool = True,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    _require(x.ndim == 2, "batch_norm", (x,), "input must be [T x C]")
    c = x.shape[1]
    _require(gamma.shape == (c,) and beta.shape == (c,), "batch_norm", (x, gamma, beta))
    n = x.shape[0]

    if training:
        mu = x.data.mean(axis=0)
        xc = x.data - mu
        var = (xc ** 2).mean(axis=0)
        inv = 1.0 / np.sqrt(var + eps)
        xhat = xc * inv
        unbiased = var * n / (n - 1) if n > 1 else var
        running_mean *= (1.0 - momentum)
        running_mean += momentum * mu
        running_var *= (1.0 - momentum)
        running_var += momentum * unbiased

        def backward(g):
            gxhat = g * gamma.data
            gx = inv * (
                gxhat
                - gxhat.mean(axis=0)
                - xhat * (gxhat * xhat).mean(axis=0)
            )
            return gx, (g * xhat).sum(axis=0), g.sum(axis=0)
    else:
        inv = 1.0 / np.sqrt(running_var + eps)
        xhat = (x.data - running_mean) * inv

        def backward(g):
            return g * gamma.data * inv, (g * xhat).sum(axis=0), g.sum(axis=0)

    return make_result("batch_norm", xhat * gamma.data + beta.data, (x, gamma, beta), backward)


# Convolution

@CATALOG.op("Time-major 1D convolution: [L x Cin] * [Cout x Cin/groups x K] -> [Lout x Cout]")
def conv1d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    *,
    stride: int = 1,
    padding: int = 0,
    groups: int = 1,
) -> Tensor:
    tensors = (x, weight) if bias is None else (x, weight, bias)
    _require(x.ndim == 2 and weight.ndim == 3, "conv1d", tensors, "expected [L x Cin] input and 3D kernel")
    length, c_in = x.shape
    c_out, c_per_group, k = weight.shape
    _require(c_in % groups == 0 and c_out % groups == 0, "conv1d", tensors, "channels not divisible by groups")
    _require(c_in // groups == c_per_group, "conv1d", tensors, "kernel input channels do not match")
    if bias is not None:
        _require(bias.shape == (c_out,), "conv1d", tensors, "bias extent differs from output channels")
    padded_len = length + 2 * padding
    _require(padded_len >= k, "conv1d", tensors, "input shorter than kernel")

    xp = np.pad(x.data, ((padding, padding), (0, 0)))
    # [Lout, Cin, K]
    windows = sliding_window_view(xp, k, axis=0)[::stride]
    l_out = windows.shape[0]
    o_per_group = c_out // groups
    win_g = windows.reshape(l_out, groups, c_per_group, k)
    w_g = weight.data.reshape(groups, o_per_group, c_per_group, k)
    out = np.einsum("lgck,gock->lgo", win_g, w_g, optimize=True).reshape(l_out, c_out)
    if bias is not None:
        out = out + bias.data

    def backward(g):
        g_g = g.reshape(l_out, groups, o_per_group)
        gw = np.einsum("lgo,lgck->gock", g_g, win_g, optimize=True).reshape(weight.shape)
        gwin = np.einsum("lgo,gock->lgck", g_g, w_g, optimize=True).reshape(l_out, c_in, k)
        gxp = np.zeros_like(xp)
        span = stride * (l_out - 1) + 1
        for tap in range(k):
            gxp[tap:tap + span:stride] += gwin[:, :, tap]
        gx = gxp[padding:padding + length]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    return make_result("conv1d", out, tensors, backward)


@CATALOG.op("2D convolution over a batch: [N x Cin x H x W] * [Cout x Cin x kh x kw]")
def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    *,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    tensors = (x, weight) if bias is None else (x, weight, bias)
    _require(x.ndim == 4 and weight.ndim == 4, "conv2d", tensors, "expected 4D input and kernel")
    n, c_in, h, w = x.shape
    c_out, c_k, kh, kw = weight.shape
    _require(c_in == c_k, "conv2d", tensors, "kernel input channels do not match")
    if bias is not None:
        _require(bias.shape == (c_out,), "conv2d", tensors, "bias extent differs from output channels")
    _require(h + 2 * padding >= kh and w + 2 * padding >= kw, "conv2d", tensors, "input smaller than kernel")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    # [N, Cin, Ho, Wo, kh, kw]
    cols = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = cols.shape[2], cols.shape[3]
    out = np.einsum("nchwij,ocij->nohw", cols, weight.data, optimize=True)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    def backward(g):
        gw = np.einsum("nohw,nchwij->ocij", g, cols, optimize=True)
        gcols = np.einsum("nohw,ocij->nchwij", g, weight.data, optimize=True)
        gxp = np.zeros_like(xp)
        span_h = stride * (ho - 1) + 1
        span_w = stride * (wo - 1) + 1
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + span_h:stride, j:j + span_w:stride] += gcols[..., i, j]
        gx = gxp[:, :, padding:padding + h, padding:padding + w]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    return make_result("conv2d", out, tensors, backward)


# Attention and sequence helpers

@CATALOG.op("Multi-head scaled dot-product attention on [T x D] operands")
def scaled_dot_product_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    bias: Optional[Tensor] = None,
    *,
    heads: int = 1,
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    tensors = (q, k, v) if bias is None else (q, k, v, bias)
    _require(q.ndim == 2 and k.ndim == 2 and v.ndim == 2, "scaled_dot_product_attention", tensors, "operands must be 2D")
    tq, d = q.shape
    tk = k.shape[0]
    _require(k.shape == (tk, d) and v.shape == (tk, d), "scaled_dot_product_attention", tensors)
    _require(d % heads == 0, "scaled_dot_product_attention", tensors, f"D={d} not divisible by heads={heads}")
    if bias is not None:
        _require(bias.shape == (heads, tq, tk), "scaled_dot_product_attention", tensors, "bias must be [heads x Tq x Tk]")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        _require(mask.shape == (tq, tk), "scaled_dot_product_attention", tensors, "mask must be [Tq x Tk]")
        _require(bool(mask.any(axis=1).all()), "scaled_dot_product_attention", tensors, "mask hides a whole row")

    dh = d // heads
    factor = 1.0 / math.sqrt(dh)
    qh = q.data.reshape(tq, heads, dh).transpose(1, 0, 2)
    kh = k.data.reshape(tk, heads, dh).transpose(1, 0, 2)
    vh = v.data.reshape(tk, heads, dh).transpose(1, 0, 2)

    scores = np.matmul(qh, kh.transpose(0, 2, 1)) * factor
    if bias is not None:
        scores = scores + bias.data
    if mask is not None:
        scores = np.where(mask[None], scores, -np.inf)
    scores = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(scores)
    p = e / e.sum(axis=-1, keepdims=True)
    out = np.matmul(p, vh).transpose(1, 0, 2).reshape(tq, d)

    def backward(g):
        gh = g.reshape(tq, heads, dh).transpose(1, 0, 2)
        gp = np.matmul(gh, vh.transpose(0, 2, 1))
        gv = np.matmul(p.transpose(0, 2, 1), gh)
        gs = p * (gp - (gp * p).sum(axis=-1, keepdims=True))
        gq = np.matmul(gs, kh) * factor
        gk = np.matmul(gs.transpose(0, 2, 1), qh) * factor
        grads = [
            gq.transpose(1, 0, 2).reshape(tq, d),
            gk.transpose(1, 0, 2).reshape(tk, d),
            gv.transpose(1, 0, 2).reshape(tk, d),
        ]
        if bias is not None:
            grads.append(gs)
        return tuple(grads)

    return make_result("scaled_dot_product_attention", out, tensors, backward)


def sinusoidal_table(length: int, d: int) -> np.ndarray:
    """Sinusoidal position table [length x d]."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2.0 * np.floor(i / 2.0)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


@CATALOG.op("Add sinusoidal absolute positions to a [T x D] sequence")
def positional_encoding(x: Tensor, *, offset: int = 0) -> Tensor:
    _require(x.ndim == 2, "positional_encoding", (x,), "input must be [T x D]")
    t, d = x.shape
    table = sinusoidal_table(offset + t, d)[offset:]

    def backward(g):
        return (g,)

    return make_result("positional_encoding", x.data + table, (x,), backward)


@CATALOG.op("Gather rows of a [V x D] table by integer ids")
def embedding_lookup(table: Tensor, *, ids: Sequence[int]) -> Tensor:
    _require(table.ndim == 2, "embedding_lookup", (table,), "table must be [V x D]")
    idx = np.asarray(ids, dtype=np.int64)
    _require(
        idx.size == 0 or (idx.min() >= 0 and idx.max() < table.shape[0]),
        "embedding_lookup",
        (table,),
        f"ids outside [0, {table.shape[0]})",
    )

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return (gt,)

    return make_result("embedding_lookup", table.data[idx], (table,), backward)
