"""Brute-force references the fast implementations are checked against."""

import itertools
from typing import Dict, Tuple

import numpy as np


def collapse(path, blank: int = 0) -> Tuple[int, ...]:
    """Merge repeats then drop blanks."""
    out = []
    prev = None
    for k in path:
        if k != prev and k != blank:
            out.append(int(k))
        prev = k
    return tuple(out)


def path_posteriors(log_probs: np.ndarray, blank: int = 0) -> Dict[Tuple[int, ...], float]:
    """Probability of every collapsed label sequence by enumerating all V^T paths."""
    t_len, vocab = log_probs.shape
    probs = np.exp(log_probs)
    totals: Dict[Tuple[int, ...], float] = {}
    for path in itertools.product(range(vocab), repeat=t_len):
        p = float(np.prod(probs[np.arange(t_len), path]))
        key = collapse(path, blank)
        totals[key] = totals.get(key, 0.0) + p
    return totals


def prefix_probability(totals: Dict[Tuple[int, ...], float], prefix: Tuple[int, ...]) -> float:
    """Mass of collapsed outputs that start with ``prefix``."""
    return sum(p for seq, p in totals.items() if seq[:len(prefix)] == prefix)


def random_log_probs(rng: np.random.Generator, t_len: int, vocab: int) -> np.ndarray:
    logits = rng.normal(size=(t_len, vocab))
    return logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))


def levenshtein(a, b) -> int:
    """Plain two-row edit distance."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]
