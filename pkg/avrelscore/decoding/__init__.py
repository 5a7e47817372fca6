"""Joint CTC/attention beam search with n-gram shallow fusion."""

from avrelscore.decoding.views import BeamResult, Hypothesis, combine_scores
from avrelscore.decoding.lm import NGramLM, train_ngram_lm
from avrelscore.decoding.ctc_prefix import CTCPrefixScorer, CTCPrefixState, ctc_prefix_score
from avrelscore.decoding.beam_search import BeamSearchDecoder, ModelScoringSource, ScoringSource, beam_search

__all__ = [
    "BeamResult",
    "Hypothesis",
    "combine_scores",
    "NGramLM",
    "train_ngram_lm",
    "CTCPrefixScorer",
    "CTCPrefixState",
    "ctc_prefix_score",
    "BeamSearchDecoder",
    "ModelScoringSource",
    "ScoringSource",
    "beam_search",
]
