"""Word error rate from the Levenshtein distance between word sequences."""

from typing import Iterable, Sequence, Tuple

from editdistance import eval as levenshtein

from avrelscore.core.exceptions import DatasetError


def word_errors(reference: Sequence[str], hypothesis: Sequence[str]) -> int:
    """Minimum substitutions + deletions + insertions turning ``reference`` into ``hypothesis``."""
    return int(levenshtein(list(reference), list(hypothesis)))


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """100 * (S + D + I) / N."""
    if len(reference) == 0:
        raise DatasetError("WER is undefined for an empty reference")
    return 100.0 * word_errors(reference, hypothesis) / len(reference)


def corpus_wer(pairs: Iterable[Tuple[Sequence[str], Sequence[str]]]) -> float:
    """Total errors over total reference words."""
    errors = words = 0
    for reference, hypothesis in pairs:
        errors += word_errors(reference, hypothesis)
        words += len(reference)
    if words == 0:
        raise DatasetError("WER is undefined for an empty reference")
    return 100.0 * errors / words
