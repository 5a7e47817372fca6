"""Data models for the network: vocabulary, feature sequences and reliability traces."""

from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from avrelscore.core.exceptions import VocabularyError
from avrelscore.tensor import Tensor

BLANK = 0
SOS = 1
EOS = 2
SPECIALS = ("<blank>", "<sos>", "<eos>")

# One word per synthetic symbol
WORDS = (
    "ba", "de", "gi", "ko", "mu", "pa", "te", "zo",
    "la", "ne", "ri", "so", "vu", "fa", "hi", "yo",
)


class Vocabulary(BaseModel):
    """Token inventory: blank, sos and eos followed by the word symbols."""

    model_config = ConfigDict(frozen=True)

    words: Tuple[str, ...]

    @field_validator("words")
    @classmethod
    def validate_words(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        if not v:
            raise ValueError("vocabulary needs at least one word")
        if len(set(v)) != len(v):
            raise ValueError("vocabulary words must be distinct")
        if set(v) & set(SPECIALS):
            raise ValueError("words must not reuse special token names")
        return v

    @classmethod
    def of_size(cls, n_words: int) -> "Vocabulary":
        if not 1 <= n_words <= len(WORDS):
            raise VocabularyError(f"Vocabulary size must lie in [1, {len(WORDS)}], got {n_words}")
        return cls(words=WORDS[:n_words])

    @property
    def blank(self) -> int:
        return BLANK

    @property
    def sos(self) -> int:
        return SOS

    @property
    def eos(self) -> int:
        return EOS

    @property
    def size(self) -> int:
        return len(SPECIALS) + len(self.words)

    @property
    def word_ids(self) -> List[int]:
        return list(range(len(SPECIALS), self.size))

    def encode(self, words: Sequence[str]) -> List[int]:
        ids = []
        for w in words:
            try:
                ids.append(len(SPECIALS) + self.words.index(w))
            except ValueError:
                raise VocabularyError(f"Unknown word '{w}'") from None
        return ids

    def decode(self, ids: Sequence[int]) -> List[str]:
        """Word strings for word ids; special tokens are dropped."""
        out = []
        for i in ids:
            i = int(i)
            if not 0 <= i < self.size:
                raise VocabularyError(f"Token id {i} outside vocabulary of {self.size}")
            if i >= len(SPECIALS):
                out.append(self.words[i - len(SPECIALS)])
        return out

    def check_ids(self, ids: Sequence[int]) -> None:
        for i in ids:
            if not 0 <= int(i) < self.size:
                raise VocabularyError(f"Token id {int(i)} outside vocabulary of {self.size}")


class FeatureSequence(BaseModel):
    """Front-end output f_a or f_v as a [T x D] tensor."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: Tensor
    modality: Literal["audio", "visual"]

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


class ReliabilityTrace(BaseModel):
    """Per-dimension reliability scores s_a and s_v, both [T x D] in (0, 1)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    s_a: Tensor
    s_v: Tensor

    def frame_means(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-frame means over D of (s_a, s_v)."""
        return self.s_a.data.mean(axis=1), self.s_v.data.mean(axis=1)


class ModelOutput(NamedTuple):
    ctc_logits: Tensor
    att_logits: Tensor
    trace: Optional[ReliabilityTrace]


class EncoderOutput(BaseModel):
    """Encoder memory plus the trace, reused across decoder calls."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    memory: Tensor
    ctc_logits: Tensor
    trace: Optional[ReliabilityTrace] = Field(default=None)
