"""Joint CTC/attention beam search with shallow n-gram fusion.

Every candidate is ranked by
    alpha * log p_att + (1 - alpha) * log p_ctc + beta * log p_lm
where p_ctc is the CTC prefix probability of the candidate (for an eos
extension, the full-sequence probability of the prefix).
"""

import logging
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from avrelscore.core.config import DecodeConfig
from avrelscore.decoding.ctc_prefix import CTCPrefixScorer, CTCPrefixState
from avrelscore.decoding.lm import NGramLM
from avrelscore.decoding.views import BeamResult, Hypothesis
from avrelscore.model.views import EncoderOutput, Vocabulary
from avrelscore.tensor import no_grad

logger = logging.getLogger(__name__)


class ScoringSource(Protocol):
    """Access to one utterance's model outputs."""

    def ctc_log_probs(self) -> np.ndarray:
        """[T x V] CTC log-probabilities."""
        ...

    def attention_log_probs(self, prefix: Sequence[int]) -> np.ndarray:
        """[V] next-token log-probabilities given the output ids after sos."""
        ...


class ModelScoringSource:
    """Scores from a trained model over a fixed encoder output."""

    def __init__(self, model, encoder_output: EncoderOutput):
        self.model = model
        self.encoder_output = encoder_output
        self._att_cache: Dict[Tuple[int, ...], np.ndarray] = {}

    def ctc_log_probs(self) -> np.ndarray:
        return log_softmax(self.encoder_output.ctc_logits.data, axis=-1)

    def attention_log_probs(self, prefix: Sequence[int]) -> np.ndarray:
        key = tuple(int(t) for t in prefix)
        if key not in self._att_cache:
            with no_grad():
                logits = self.model.decode_forward(self.encoder_output.memory, [self.model.vocab.sos, *key])
            self._att_cache[key] = log_softmax(logits.data[-1], axis=-1)
        return self._att_cache[key]


class _Running:
    __slots__ = ("hyp", "state")

    def __init__(self, hyp: Hypothesis, state: CTCPrefixState):
        self.hyp = hyp
        self.state = state


class BeamSearchDecoder:
    """
    Length-synchronous beam search.

    At each step every running hypothesis is closed with eos into the ended
    set and extended by each word; the ``beam_width`` best word extensions
    keep running. Ended hypotheses never occupy a running slot. At
    ``max_len`` output words only eos is allowed.
    """

    def __init__(self, cfg: DecodeConfig, vocab: Vocabulary, lm: Optional[NGramLM] = None):
        self.cfg = cfg
        self.vocab = vocab
        self.lm = lm

    def _lm_score(self, token: int, history: Sequence[int]) -> float:
        if self.lm is None:
            return 0.0
        return self.lm.log_prob(token, history)

    def _order(self, hyp: Hypothesis) -> tuple:
        return (-hyp.ranking_score(self.cfg.normalize_by_length), hyp.tokens)

    def _expand(
        self,
        item: _Running,
        source: ScoringSource,
        scorer: CTCPrefixScorer,
        words_allowed: bool,
    ) -> Tuple[Hypothesis, List[Tuple[Hypothesis, CTCPrefixState]]]:
        hyp = item.hyp
        alpha, beta = self.cfg.alpha, self.cfg.beta
        att = source.attention_log_probs(hyp.tokens)

        eos = self.vocab.eos
        ended = Hypothesis.build(
            hyp.tokens + (eos,),
            hyp.score_att + float(att[eos]),
            scorer.final(item.state),
            hyp.score_lm + self._lm_score(eos, hyp.tokens),
            alpha,
            beta,
        )
        out: List[Tuple[Hypothesis, CTCPrefixState]] = []
        if not words_allowed:
            return ended, out

        words = self.vocab.word_ids
        last = hyp.tokens[-1] if hyp.tokens else -1
        psi, states = scorer.extend(item.state, last, words)
        for token, score_ctc, state in zip(words, psi, states):
            out.append((
                Hypothesis.build(
                    hyp.tokens + (token,),
                    hyp.score_att + float(att[token]),
                    float(score_ctc),
                    hyp.score_lm + self._lm_score(token, hyp.tokens),
                    alpha,
                    beta,
                ),
                state,
            ))
        return ended, out

    def decode(self, source: ScoringSource) -> BeamResult:
        """
        Decode one utterance.

        Args:
            source: Model outputs for the utterance

        Returns:
            BeamResult; ``reached_eos`` is False when no completed hypothesis has
            a finite score and the best partial hypothesis is returned instead
        """
        scorer = CTCPrefixScorer(source.ctc_log_probs(), self.vocab.blank)
        root = Hypothesis.build((), 0.0, 0.0, 0.0, self.cfg.alpha, self.cfg.beta)
        running = [_Running(root, scorer.initial_state())]
        completed: List[Hypothesis] = []
        best_partial = root

        for step in range(self.cfg.max_len + 1):
            candidates = []
            for item in running:
                ended, extensions = self._expand(item, source, scorer, words_allowed=step < self.cfg.max_len)
                completed.append(ended)
                candidates.extend(extensions)
            candidates.sort(key=lambda c: self._order(c[0]))
            running = [_Running(hyp, state) for hyp, state in candidates[: self.cfg.beam_width]]
            if not running:
                break
            best_partial = running[0].hyp

        completed.sort(key=self._order)
        finite = [h for h in completed if np.isfinite(h.combined)]
        if not finite:
            logger.warning(
                f"No hypothesis reached eos with a finite score within max_len={self.cfg.max_len}; "
                f"returning the best partial hypothesis"
            )
            tokens = [t for t in best_partial.tokens if t != self.vocab.eos]
            return BeamResult(tokens=tokens, hypothesis=best_partial, reached_eos=False, completed=completed)
        best = finite[0]
        return BeamResult(tokens=list(best.tokens[:-1]), hypothesis=best, reached_eos=True, completed=completed)


def beam_search(source: ScoringSource, lm: Optional[NGramLM], cfg: DecodeConfig, vocab: Vocabulary) -> BeamResult:
    return BeamSearchDecoder(cfg, vocab, lm).decode(source)
