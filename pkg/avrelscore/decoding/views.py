"""Data models for beam search decoding."""

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


def combine_scores(score_att: float, score_ctc: float, score_lm: float, alpha: float, beta: float) -> float:
    """
    alpha * att + (1 - alpha) * ctc + beta * lm.

    Terms with a zero weight are dropped rather than multiplied, so an
    infeasible CTC prefix (-inf) does not turn alpha=1 scores into nan.
    """
    total = 0.0
    for weight, score in ((alpha, score_att), (1.0 - alpha, score_ctc), (beta, score_lm)):
        if weight != 0.0:
            total += weight * score
    return total


class Hypothesis(BaseModel):
    """A (partial) output sequence with its component scores."""

    model_config = ConfigDict(frozen=True)

    tokens: Tuple[int, ...] = Field(default=(), description="Output ids after sos; may end with eos")
    score_att: float = 0.0
    score_ctc: float = 0.0
    score_lm: float = 0.0
    alpha: float = Field(ge=0.0, le=1.0)
    beta: float = Field(ge=0.0)
    combined: float = 0.0

    @model_validator(mode="after")
    def validate_combined(self):
        expected = combine_scores(self.score_att, self.score_ctc, self.score_lm, self.alpha, self.beta)
        if self.combined != expected:
            raise ValueError(f"combined score {self.combined!r} differs from its components ({expected!r})")
        return self

    @classmethod
    def build(
        cls,
        tokens: Tuple[int, ...],
        score_att: float,
        score_ctc: float,
        score_lm: float,
        alpha: float,
        beta: float,
    ) -> "Hypothesis":
        return cls(
            tokens=tokens,
            score_att=score_att,
            score_ctc=score_ctc,
            score_lm=score_lm,
            alpha=alpha,
            beta=beta,
            combined=combine_scores(score_att, score_ctc, score_lm, alpha, beta),
        )

    def ranking_score(self, normalize_by_length: bool = False) -> float:
        if normalize_by_length and self.tokens:
            return self.combined / len(self.tokens)
        return self.combined


class BeamResult(BaseModel):
    """Outcome of decoding one utterance."""

    tokens: List[int] = Field(description="Word ids, eos stripped")
    hypothesis: Hypothesis
    reached_eos: bool
    completed: List[Hypothesis] = Field(default_factory=list, description="All completed hypotheses, best first")
