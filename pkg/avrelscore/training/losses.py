"""CTC, attention and joint objectives."""

import logging
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from avrelscore.core.exceptions import ConfigError, InfeasibleAlignmentError, ShapeError, VocabularyError
from avrelscore.model.views import BLANK
from avrelscore.tensor import Tensor, as_tensor, ops
from avrelscore.tensor.tensor import make_result

logger = logging.getLogger(__name__)

NEG_INF = -np.inf


def required_frames(labels: Sequence[int]) -> int:
    """Minimum frames for an alignment: one per label plus a blank between repeats."""
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return len(labels) + repeats


def extend_with_blanks(labels: Sequence[int], blank: int = BLANK) -> List[int]:
    ext = [blank]
    for label in labels:
        ext.extend([int(label), blank])
    return ext


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    return logits - logsumexp(logits, axis=1, keepdims=True)


def ctc_forward_backward(log_probs: np.ndarray, labels: Sequence[int], blank: int = BLANK) -> Tuple[float, np.ndarray]:
    """
    Log-space forward-backward over the blank-augmented label sequence.

    Args:
        log_probs: [T x V] per-frame log-probabilities
        labels: Target label ids (no blanks)
        blank: Blank id

    Returns:
        (log Z, occupancy [T x V]) where occupancy[t, k] is the posterior
        probability that frame t emits symbol k
    """
    t_len, vocab = log_probs.shape
    needed = required_frames(labels)
    if t_len < needed:
        raise InfeasibleAlignmentError(t_len, needed)
    ext = extend_with_blanks(labels, blank)
    n = len(ext)
    # skip transitions s-2 -> s are allowed onto a label that differs from ext[s-2]
    can_skip = np.array([s >= 2 and ext[s] != blank and ext[s] != ext[s - 2] for s in range(n)])
    emit = log_probs[:, ext]

    alpha = np.full((t_len, n), NEG_INF)
    alpha[0, 0] = emit[0, 0]
    if n > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, t_len):
        prev = alpha[t - 1]
        stay = prev
        step = np.concatenate(([NEG_INF], prev[:-1]))
        skip = np.where(can_skip, np.concatenate(([NEG_INF, NEG_INF], prev[:-2])), NEG_INF)
        alpha[t] = np.logaddexp(np.logaddexp(stay, step), skip) + emit[t]

    # beta[t, s]: log-prob of frames t+1.. given state s at frame t
    beta = np.full((t_len, n), NEG_INF)
    beta[-1, -1] = 0.0
    if n > 1:
        beta[-1, -2] = 0.0
    skip_into = np.concatenate((can_skip[2:], [False, False]))
    for t in range(t_len - 2, -1, -1):
        nxt = beta[t + 1] + emit[t + 1]
        stay = nxt
        step = np.concatenate((nxt[1:], [NEG_INF]))
        skip = np.where(skip_into, np.concatenate((nxt[2:], [NEG_INF, NEG_INF])), NEG_INF)
        beta[t] = np.logaddexp(np.logaddexp(stay, step), skip)

    tail = alpha[-1, -1] if n == 1 else np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    log_z = float(tail)

    gamma = np.exp(alpha + beta - log_z)
    occupancy = np.zeros((t_len, vocab))
    for s, symbol in enumerate(ext):
        occupancy[:, symbol] += gamma[:, s]
    return log_z, occupancy


def ctc_loss(logits: Tensor, labels: Sequence[int], blank: int = BLANK) -> Tensor:
    """
    Negative log of the summed probability of all CTC alignments.

    Args:
        logits: [T x V] unnormalised scores
        labels: Target label ids
        blank: Blank id

    Returns:
        Scalar loss tensor; its gradient w.r.t. the logits is softmax - occupancy
    """
    if logits.ndim != 2:
        raise ShapeError("ctc_loss", [logits.shape], reason="logits must be [T x V]")
    labels = [int(k) for k in labels]
    if any(k == blank or not 0 <= k < logits.shape[1] for k in labels):
        raise ShapeError("ctc_loss", [logits.shape], reason=f"labels {labels} invalid for blank={blank}")
    log_probs = _log_softmax(logits.data)
    log_z, occupancy = ctc_forward_backward(log_probs, labels, blank)
    grad = np.exp(log_probs) - occupancy

    def backward(g):
        return (g * grad,)

    return make_result("ctc_loss", np.array(-log_z), (logits,), backward)


def attention_loss(att_logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Mean per-token negative log-likelihood of ``targets`` under softmax(att_logits)."""
    j, vocab = att_logits.shape
    if len(targets) != j:
        raise ShapeError("attention_loss", [att_logits.shape, (len(targets),)], reason="one target per position")
    ids = np.asarray(targets, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise VocabularyError(f"Attention targets {list(targets)} fall outside a vocabulary of {vocab} ids")
    one_hot = np.zeros((j, vocab))
    one_hot[np.arange(j), ids] = 1.0
    picked = ops.sum(ops.hadamard(ops.log_softmax(att_logits, axis=-1), Tensor(one_hot)))
    return ops.scale(picked, factor=-1.0 / j)


Loss = Union[Tensor, float]


def joint_loss(l_att: Loss, l_ctc: Loss, lam: float) -> Loss:
    """lam * l_att + (1 - lam) * l_ctc."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("lambda", f"lambda must lie in [0, 1], got {lam}")
    if isinstance(l_att, Tensor) or isinstance(l_ctc, Tensor):
        return ops.add(ops.scale(as_tensor(l_att), factor=lam), ops.scale(as_tensor(l_ctc), factor=1.0 - lam))
    return lam * l_att + (1.0 - lam) * l_ctc


def ctc_greedy_decode(log_probs: np.ndarray, blank: int = BLANK) -> List[int]:
    """Best-path decoding: argmax per frame, merge repeats, drop blanks."""
    best = np.asarray(log_probs).argmax(axis=1)
    out = []
    prev = None
    for k in best:
        k = int(k)
        if k != prev and k != blank:
            out.append(k)
        prev = k
    return out
