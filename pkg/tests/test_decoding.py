"""Tests for the n-gram LM, CTC prefix scoring and the joint beam search."""

import itertools
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import pytest
from scipy.special import log_softmax

from avrelscore.core.config import DecodeConfig
from avrelscore.core.exceptions import DatasetError, VocabularyError
from avrelscore.decoding import (
    BeamSearchDecoder,
    CTCPrefixScorer,
    Hypothesis,
    NGramLM,
    beam_search,
    combine_scores,
    ctc_prefix_score,
    train_ngram_lm,
)
from avrelscore.model.views import Vocabulary
from tests.oracles import path_posteriors, prefix_probability, random_log_probs

VOCAB = Vocabulary.of_size(2)
CORPUS = [["ba", "de"], ["de", "de", "ba"], ["ba"], ["de", "ba", "ba", "de"]]


class TableSource:
    """Random but fixed scores: attention log-probs are a pure function of the prefix."""

    def __init__(self, seed: int, frames: int = 5, vocab: Vocabulary = VOCAB, eos_allowed: bool = True):
        self.seed = seed
        self.size = vocab.size
        self.eos = vocab.eos
        self.eos_allowed = eos_allowed
        self.log_probs = random_log_probs(np.random.default_rng([seed, 1]), frames, vocab.size)

    def ctc_log_probs(self) -> np.ndarray:
        return self.log_probs

    def attention_log_probs(self, prefix: Sequence[int]) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 2, len(prefix), *prefix])
        out = log_softmax(rng.normal(scale=2.0, size=self.size))
        if not self.eos_allowed:
            out[self.eos] = -np.inf
        return out


def _lm(order: int = 2) -> NGramLM:
    return train_ngram_lm(CORPUS, order, 0.5, VOCAB)


def exhaustive(source: TableSource, lm: Optional[NGramLM], cfg: DecodeConfig) -> Tuple[Tuple[int, ...], float]:
    """Best complete sequence over every word sequence up to max_len."""
    totals = path_posteriors(source.ctc_log_probs())
    best: Tuple[float, Tuple[int, ...]] = (-math.inf, ())
    for length in range(cfg.max_len + 1):
        for seq in itertools.product(VOCAB.word_ids, repeat=length):
            att = 0.0
            for i, token in enumerate(seq):
                att += float(source.attention_log_probs(seq[:i])[token])
            att += float(source.attention_log_probs(seq)[VOCAB.eos])
            mass = totals.get(seq, 0.0)
            ctc = math.log(mass) if mass > 0 else -math.inf
            lm_score = lm.sentence_log_prob(seq) if lm is not None else 0.0
            score = combine_scores(att, ctc, lm_score, cfg.alpha, cfg.beta)
            if score > best[0]:
                best = (score, seq)
    return best[1], best[0]


def greedy(source: TableSource, lm: Optional[NGramLM], cfg: DecodeConfig) -> Tuple[int, ...]:
    """Follow the best single word extension, closing every prefix with eos on the way."""
    scorer = CTCPrefixScorer(source.ctc_log_probs(), VOCAB.blank)
    state = scorer.initial_state()
    tokens: Tuple[int, ...] = ()
    att_total = lm_total = 0.0
    ended = []
    for step in range(cfg.max_len + 1):
        att = source.attention_log_probs(tokens)

        def lm_score(token: int) -> float:
            return lm_total + (lm.log_prob(token, tokens) if lm is not None else 0.0)

        eos_score = combine_scores(att_total + att[VOCAB.eos], scorer.final(state), lm_score(VOCAB.eos), cfg.alpha, cfg.beta)
        ended.append((eos_score, tokens))
        if step == cfg.max_len:
            break
        psi, states = scorer.extend(state, tokens[-1] if tokens else -1, VOCAB.word_ids)
        options = []
        for token, ctc, next_state in zip(VOCAB.word_ids, psi, states):
            combined = combine_scores(att_total + att[token], float(ctc), lm_score(token), cfg.alpha, cfg.beta)
            options.append((combined, tokens + (token,), next_state))
        _, chosen, state = min(options, key=lambda o: (-o[0], o[1]))
        att_total += float(att[chosen[-1]])
        lm_total = lm_score(chosen[-1])
        tokens = chosen
    return min(ended, key=lambda e: (-e[0], e[1] + (VOCAB.eos,)))[1]


class TestNGramLM:
    def test_smoothed_unigram(self):
        vocab = Vocabulary(words=("a", "b"))
        lm = train_ngram_lm([["a", "b"]], order=1, add_k=1.0, vocab=vocab)
        assert math.exp(lm.log_prob(vocab.encode(["a"])[0], [])) == pytest.approx(1 / 3)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_distributions_normalise(self, order):
        lm = _lm(order)
        words = VOCAB.word_ids
        for length in range(3):
            for history in itertools.product(words, repeat=length):
                assert sum(lm.distribution(history).values()) == pytest.approx(1.0, abs=1e-9)

    def test_unseen_continuation_has_mass(self):
        lm = train_ngram_lm([["ba", "ba"]], order=2, add_k=0.1, vocab=VOCAB)
        de = VOCAB.encode(["de"])[0]
        assert lm.log_prob(de, VOCAB.encode(["ba"])) > -math.inf

    def test_context_is_padded_with_sos(self):
        lm = _lm(3)
        assert lm.context_of([]) == (VOCAB.sos, VOCAB.sos)
        assert lm.context_of([3, 4, 3]) == (4, 3)

    def test_rejects_special_tokens(self):
        with pytest.raises(VocabularyError):
            _lm().log_prob(VOCAB.sos, [])

    def test_empty_corpus(self):
        with pytest.raises(DatasetError):
            train_ngram_lm([[], []], order=2, add_k=0.1)

    def test_invalid_order(self):
        with pytest.raises(DatasetError):
            NGramLM(0, 0.1, VOCAB)

    def test_inferred_vocabulary_keeps_first_seen_order(self):
        lm = train_ngram_lm([["x", "y"], ["z", "x"]], order=1, add_k=0.1)
        assert lm.vocab.words == ("x", "y", "z")

    def test_saved_model_scores_identically(self, tmp_path):
        lm = _lm(3)
        restored = NGramLM.load(lm.save(tmp_path / "lm.json", seed=4))
        for seq in ([3], [4, 3], [3, 3, 4]):
            assert restored.sentence_log_prob(seq) == lm.sentence_log_prob(seq)


class TestCTCPrefixScore:
    def test_single_frame(self, rng):
        lp = random_log_probs(rng, 1, 3)
        assert ctc_prefix_score(lp, [], 2) == pytest.approx(lp[0, 2], abs=1e-12)

    @pytest.mark.parametrize("frames,vocab", [(1, 2), (2, 3), (3, 3), (4, 3), (5, 3), (3, 2)])
    def test_matches_path_enumeration(self, rng, frames, vocab):
        lp = random_log_probs(rng, frames, vocab)
        totals = path_posteriors(lp)
        labels = range(1, vocab)
        for length in range(1, frames + 2):
            for prefix in itertools.product(labels, repeat=length):
                got = ctc_prefix_score(lp, prefix[:-1], prefix[-1])
                mass = prefix_probability(totals, prefix)
                if mass == 0.0:
                    assert got == -math.inf
                else:
                    assert got == pytest.approx(math.log(mass), abs=1e-10)

    def test_full_sequence_scores_form_a_distribution(self, rng):
        lp = random_log_probs(rng, 4, 3)
        scorer = CTCPrefixScorer(lp, blank=0)
        total = 0.0
        for length in range(0, 5):
            for seq in itertools.product([1, 2], repeat=length):
                state, last = scorer.initial_state(), -1
                for label in seq:
                    _, states = scorer.extend(state, last, [label])
                    state, last = states[0], label
                total += math.exp(scorer.final(state))
        assert total <= 1.0 + 1e-12
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_blank_extension_rejected(self, rng):
        scorer = CTCPrefixScorer(random_log_probs(rng, 3, 3), blank=0)
        with pytest.raises(VocabularyError):
            scorer.extend(scorer.initial_state(), -1, [0])


class TestHypothesis:
    def test_build_combines(self):
        hyp = Hypothesis.build((3,), -1.0, -2.0, -4.0, alpha=0.5, beta=0.25)
        assert hyp.combined == 0.5 * -1.0 + 0.5 * -2.0 + 0.25 * -4.0

    def test_inconsistent_combined_rejected(self):
        with pytest.raises(ValueError):
            Hypothesis(tokens=(3,), score_att=-1.0, score_ctc=-2.0, score_lm=0.0, alpha=0.5, beta=0.0, combined=-1.0)

    def test_zero_weight_drops_infinite_term(self):
        assert combine_scores(-1.0, -math.inf, -3.0, alpha=1.0, beta=0.0) == -1.0


class TestBeamSearch:
    @pytest.mark.parametrize("seed", range(12))
    def test_wide_beam_is_exhaustive(self, seed):
        cfg = DecodeConfig(beam_width=81, alpha=0.7, beta=0.3, max_len=4)
        source, lm = TableSource(seed), _lm(2)
        result = beam_search(source, lm, cfg, VOCAB)
        tokens, score = exhaustive(source, lm, cfg)
        assert result.reached_eos
        assert tuple(result.tokens) == tokens
        assert result.hypothesis.combined == pytest.approx(score, abs=1e-9)

    @pytest.mark.parametrize("seed", range(12))
    def test_width_one_is_greedy(self, seed):
        cfg = DecodeConfig(beam_width=1, alpha=0.6, beta=0.2, max_len=4)
        source, lm = TableSource(seed), _lm(2)
        assert tuple(beam_search(source, lm, cfg, VOCAB).tokens) == greedy(source, lm, cfg)

    def test_no_width_beats_exhaustive(self):
        for seed in range(100):
            source, lm = TableSource(seed), _lm(2)
            base = DecodeConfig(alpha=0.7, beta=0.3, max_len=4)
            _, best = exhaustive(source, lm, base)
            for width in (1, 2, 3, 5):
                cfg = base.model_copy(update={"beam_width": width})
                assert beam_search(source, lm, cfg, VOCAB).hypothesis.combined <= best + 1e-9

    def test_wider_beam_never_scores_lower(self):
        base = DecodeConfig(alpha=0.7, beta=0.3, max_len=4)
        lm = _lm(2)
        for seed in range(100):
            source = TableSource(seed)
            previous = -math.inf
            for width in range(1, 12):
                cfg = base.model_copy(update={"beam_width": width})
                score = beam_search(source, lm, cfg, VOCAB).hypothesis.combined
                assert score >= previous - 1e-9, (seed, width)
                previous = score

    def test_ended_hypotheses_keep_running_slots_free(self):
        cfg = DecodeConfig(beam_width=1, alpha=0.5, beta=0.0, max_len=3)
        result = beam_search(TableSource(5), None, cfg, VOCAB)
        assert sorted(len(h.tokens) for h in result.completed) == [1, 2, 3, 4]

    def test_every_completed_hypothesis_is_consistent(self):
        cfg = DecodeConfig(beam_width=4, alpha=0.4, beta=0.7, max_len=4)
        result = beam_search(TableSource(3), _lm(2), cfg, VOCAB)
        assert result.completed
        for hyp in result.completed:
            assert hyp.tokens[-1] == VOCAB.eos
            assert hyp.combined == combine_scores(hyp.score_att, hyp.score_ctc, hyp.score_lm, 0.4, 0.7)

    def test_beta_zero_ignores_the_lm(self):
        cfg = DecodeConfig(beam_width=3, alpha=0.5, beta=0.0, max_len=4)
        other = train_ngram_lm([["ba", "ba", "ba"]], order=3, add_k=0.01, vocab=VOCAB)
        for seed in range(10):
            a = beam_search(TableSource(seed), _lm(2), cfg, VOCAB)
            b = beam_search(TableSource(seed), other, cfg, VOCAB)
            assert a.tokens == b.tokens
            assert a.hypothesis.combined == b.hypothesis.combined

    def test_alpha_one_ignores_ctc(self):
        cfg = DecodeConfig(beam_width=3, alpha=1.0, beta=0.0, max_len=4)
        for seed in range(10):
            source = TableSource(seed)
            swapped = TableSource(seed)
            swapped.log_probs = random_log_probs(np.random.default_rng(seed + 1000), 5, VOCAB.size)
            a = beam_search(source, None, cfg, VOCAB)
            b = beam_search(swapped, None, cfg, VOCAB)
            assert a.tokens == b.tokens
            assert a.hypothesis.combined == a.hypothesis.score_att

    def test_max_len_caps_output(self):
        cfg = DecodeConfig(beam_width=5, alpha=0.5, beta=0.0, max_len=2)
        for seed in range(10):
            assert len(beam_search(TableSource(seed), None, cfg, VOCAB).tokens) <= 2

    def test_best_partial_when_nothing_completes(self, caplog):
        cfg = DecodeConfig(beam_width=2, alpha=0.5, beta=0.0, max_len=3)
        with caplog.at_level(logging.WARNING, logger="avrelscore.decoding.beam_search"):
            result = BeamSearchDecoder(cfg, VOCAB).decode(TableSource(0, eos_allowed=False))
        assert not result.reached_eos
        assert len(result.tokens) == 3
        assert all(t in VOCAB.word_ids for t in result.tokens)
        assert "best partial" in caplog.text
