"""Add-k smoothed word n-gram language model used for shallow fusion."""

import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from avrelscore.core.artifacts import write_metadata
from avrelscore.core.exceptions import DatasetError, VocabularyError
from avrelscore.model.views import Vocabulary

logger = logging.getLogger(__name__)

Context = Tuple[int, ...]


class NGramLM:
    """
    n-gram model over the word ids plus eos.

    Contexts are the previous ``order - 1`` tokens, left-padded with sos, so
    p(token | context) = (c(context, token) + k) / (c(context) + k * |words + eos|).
    """

    def __init__(self, order: int, add_k: float, vocab: Vocabulary):
        if order < 1:
            raise DatasetError(f"LM order must be at least 1, got {order}")
        if add_k <= 0:
            raise DatasetError(f"add_k must be positive, got {add_k}")
        self.order = order
        self.add_k = add_k
        self.vocab = vocab
        self.outcomes: List[int] = vocab.word_ids + [vocab.eos]
        self.counts: Dict[Context, Dict[int, int]] = defaultdict(lambda: defaultdict(int))
        self.totals: Dict[Context, int] = defaultdict(int)

    def context_of(self, history: Sequence[int]) -> Context:
        width = self.order - 1
        if width == 0:
            return ()
        padded = [self.vocab.sos] * width + [int(t) for t in history]
        return tuple(padded[-width:])

    def add_sentence(self, ids: Sequence[int]) -> None:
        self.vocab.check_ids(ids)
        seq = [int(t) for t in ids] + [self.vocab.eos]
        for i, token in enumerate(seq):
            ctx = self.context_of(seq[:i])
            self.counts[ctx][token] += 1
            self.totals[ctx] += 1

    def log_prob(self, token: int, history: Sequence[int]) -> float:
        """log p(token | last order-1 tokens of history)."""
        if token not in self.outcomes:
            raise VocabularyError(f"Token {token} is not a word id or eos")
        ctx = self.context_of(history)
        count = self.counts[ctx][token] if ctx in self.counts else 0
        total = self.totals.get(ctx, 0)
        return math.log((count + self.add_k) / (total + self.add_k * len(self.outcomes)))

    def distribution(self, history: Sequence[int]) -> Dict[int, float]:
        return {token: math.exp(self.log_prob(token, history)) for token in self.outcomes}

    def sentence_log_prob(self, ids: Sequence[int]) -> float:
        seq = list(ids) + [self.vocab.eos]
        return sum(self.log_prob(t, seq[:i]) for i, t in enumerate(seq))

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "add_k": self.add_k,
            "words": list(self.vocab.words),
            "counts": [
                {"context": list(ctx), "token": token, "count": count}
                for ctx in sorted(self.counts)
                for token, count in sorted(self.counts[ctx].items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NGramLM":
        lm = cls(int(data["order"]), float(data["add_k"]), Vocabulary(words=tuple(data["words"])))
        for record in data["counts"]:
            ctx = tuple(int(t) for t in record["context"])
            lm.counts[ctx][int(record["token"])] += int(record["count"])
            lm.totals[ctx] += int(record["count"])
        return lm

    def save(self, path: Path, seed: int = 0, config_hash: str = "", created_by: str = "lm-train") -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1), encoding="utf-8")
        write_metadata(path, seed=seed, config_hash=config_hash, created_by=created_by, order=self.order)
        return path

    @classmethod
    def load(cls, path: Path) -> "NGramLM":
        path = Path(path)
        if not path.exists():
            raise DatasetError(f"Language model not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (KeyError, ValueError) as e:
            raise DatasetError(f"Malformed language model {path}: {e}") from e


def train_ngram_lm(
    transcripts: Iterable[Sequence[str]],
    order: int,
    add_k: float,
    vocab: Optional[Vocabulary] = None,
) -> NGramLM:
    """
    Count n-grams over word transcripts.

    Args:
        transcripts: Word sequences
        order: n (1 = unigram)
        add_k: Smoothing constant
        vocab: Word vocabulary; inferred in first-seen order when omitted

    Returns:
        Trained NGramLM
    """
    sentences = [list(t) for t in transcripts]
    if not sentences or all(len(s) == 0 for s in sentences):
        raise DatasetError("Cannot train a language model on an empty corpus")
    if vocab is None:
        seen: List[str] = []
        for sentence in sentences:
            seen.extend(w for w in sentence if w not in seen)
        vocab = Vocabulary(words=tuple(seen))
    lm = NGramLM(order, add_k, vocab)
    for sentence in sentences:
        lm.add_sentence(vocab.encode(sentence))
    logger.info(f"Trained order-{order} LM on {len(sentences)} transcripts ({len(lm.counts)} contexts)")
    return lm
