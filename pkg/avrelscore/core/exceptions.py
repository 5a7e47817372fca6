"""Custom exceptions for the avrelscore toolkit."""

from typing import Optional, Sequence


class AVRelScoreError(Exception):
    """Base exception for all toolkit errors."""

    def __init__(
        self,
        message: str,
        details: Optional[str] = None,
        recoverable: bool = True
    ):
        self.message = message
        self.details = details
        self.recoverable = recoverable
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.details:
            return f"{self.message}\nDetails: {self.details}"
        return self.message


class ConfigError(AVRelScoreError):
    """A configuration key is unknown or carries an invalid value."""

    def __init__(self, key: str, message: Optional[str] = None, **kwargs):
        self.key = key
        super().__init__(
            message or f"Invalid configuration key: {key}",
            recoverable=False,
            **kwargs
        )


class ShapeError(AVRelScoreError):
    """Operand shapes are not valid for an op."""

    def __init__(
        self,
        op: str,
        shapes: Sequence[tuple],
        reason: str = "shape mismatch",
        **kwargs
    ):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        shape_text = ", ".join(str(s) for s in self.shapes)
        super().__init__(f"{op}: {reason} for shapes {shape_text}", **kwargs)


class GradientError(AVRelScoreError):
    """Non-finite values or gradients were produced."""

    def __init__(self, name: str, message: Optional[str] = None, **kwargs):
        self.name = name
        super().__init__(
            message or f"Non-finite gradient for parameter '{name}'",
            recoverable=False,
            **kwargs
        )


class SizingError(AVRelScoreError):
    """A stream is too short, or its length does not divide as required."""
    pass


class CorruptionError(AVRelScoreError):
    """Corruption preconditions were violated."""
    pass


class BankLookupError(CorruptionError):
    """A plan references a patch or noise id missing from its bank."""

    def __init__(self, kind: str, key: str, **kwargs):
        self.kind = kind
        self.key = key
        super().__init__(f"{kind} id '{key}' not found in bank", **kwargs)


class InfeasibleAlignmentError(AVRelScoreError):
    """A label sequence cannot be aligned to the available frames."""

    def __init__(self, frames: int, required: int, **kwargs):
        self.frames = frames
        self.required = required
        super().__init__(
            f"CTC alignment infeasible: label needs {required} frames, got {frames}",
            **kwargs
        )


class VocabularyError(AVRelScoreError):
    """A token id lies outside the vocabulary."""
    pass


class DatasetError(AVRelScoreError):
    """Dataset, manifest, corpus or checkpoint problems."""
    pass


class MediaFormatError(DatasetError):
    """A binary container has the wrong magic, version or size."""

    def __init__(self, path: str, reason: str, **kwargs):
        self.path = path
        super().__init__(f"{path}: {reason}", recoverable=False, **kwargs)
