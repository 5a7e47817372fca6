"""CTC prefix scoring for label-synchronous decoding.

Each prefix carries two forward variables over time: r_n[t], the log-probability
that frames 0..t collapse to the prefix with frame t emitting its last label,
and r_b[t], the same with frame t emitting blank. Extending by a label c sums
over the frame at which c is first emitted.
"""

from typing import NamedTuple, Sequence, Tuple

import numpy as np

from avrelscore.core.exceptions import ShapeError, VocabularyError
from avrelscore.model.views import BLANK


class CTCPrefixState(NamedTuple):
    r_n: np.ndarray  # [T]
    r_b: np.ndarray  # [T]
    psi: float


class CTCPrefixScorer:
    """Incremental prefix scores over a fixed [T x V] matrix of CTC log-probabilities."""

    def __init__(self, log_probs: np.ndarray, blank: int = BLANK):
        log_probs = np.asarray(log_probs, dtype=np.float64)
        if log_probs.ndim != 2 or log_probs.shape[0] < 1:
            raise ShapeError("ctc_prefix_score", [log_probs.shape], reason="expected [T x V] with T >= 1")
        self.log_probs = log_probs
        self.blank = blank

    @property
    def num_frames(self) -> int:
        return self.log_probs.shape[0]

    def initial_state(self) -> CTCPrefixState:
        r_b = np.cumsum(self.log_probs[:, self.blank])
        return CTCPrefixState(r_n=np.full(self.num_frames, -np.inf), r_b=r_b, psi=0.0)

    def extend(self, state: CTCPrefixState, last: int, tokens: Sequence[int]) -> Tuple[np.ndarray, list]:
        """
        Score ``prefix + c`` for every c in ``tokens``.

        Args:
            state: State of the current prefix
            last: Last label of the prefix, or -1 for the empty prefix
            tokens: Non-blank extension labels

        Returns:
            (psi per token, new state per token)
        """
        tokens = np.asarray(tokens, dtype=int)
        if np.any(tokens == self.blank):
            raise VocabularyError("CTC prefix extension must not be blank")
        lp = self.log_probs[:, tokens]  # [T x C]
        n_frames = self.num_frames

        both = np.logaddexp(state.r_n, state.r_b)
        phi = np.repeat(both[:, None], len(tokens), axis=1)
        # a repeated label needs a blank in between
        phi[:, tokens == last] = state.r_b[:, None]

        r_n = np.full((n_frames, len(tokens)), -np.inf)
        r_b = np.full((n_frames, len(tokens)), -np.inf)
        if last < 0:
            r_n[0] = lp[0]
        psi = r_n[0].copy()
        blank_lp = self.log_probs[:, self.blank]
        for t in range(1, n_frames):
            r_n[t] = np.logaddexp(r_n[t - 1], phi[t - 1]) + lp[t]
            r_b[t] = np.logaddexp(r_b[t - 1], r_n[t - 1]) + blank_lp[t]
            psi = np.logaddexp(psi, phi[t - 1] + lp[t])
        states = [CTCPrefixState(r_n=r_n[:, i], r_b=r_b[:, i], psi=float(psi[i])) for i in range(len(tokens))]
        return psi, states

    def final(self, state: CTCPrefixState) -> float:
        """Log-probability that the whole output collapses to exactly the prefix."""
        return float(np.logaddexp(state.r_n[-1], state.r_b[-1]))


def ctc_prefix_score(log_probs: np.ndarray, prefix: Sequence[int], ext: int, blank: int = BLANK) -> float:
    """
    log p(prefix + ext is a prefix of the collapsed CTC output).

    Args:
        log_probs: [T x V] per-frame log-probabilities
        prefix: Label prefix (no blanks)
        ext: Extension label, not blank

    Returns:
        Prefix log-probability
    """
    scorer = CTCPrefixScorer(log_probs, blank)
    state = scorer.initial_state()
    last = -1
    for label in list(prefix) + [ext]:
        psi, states = scorer.extend(state, last, [label])
        state, last = states[0], int(label)
    return float(psi[0])
