"""Dense float64 tensors with reverse-mode automatic differentiation."""

from avrelscore.tensor.tensor import Tensor, as_tensor, backward, no_grad
from avrelscore.tensor.registry import CATALOG, OpRegistry, op_apply
from avrelscore.tensor import ops
from avrelscore.tensor.nn import (
    BatchNorm1d,
    Conv1d,
    Conv2d,
    Embedding,
    LayerNorm,
    Linear,
    Module,
    Parameter,
)
from avrelscore.tensor.gradcheck import grad_check, grad_check_parameters
from avrelscore.tensor.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "as_tensor",
    "backward",
    "no_grad",
    "CATALOG",
    "OpRegistry",
    "op_apply",
    "ops",
    "BatchNorm1d",
    "Conv1d",
    "Conv2d",
    "Embedding",
    "LayerNorm",
    "Linear",
    "Module",
    "Parameter",
    "grad_check",
    "grad_check_parameters",
    "load_checkpoint",
    "save_checkpoint",
]
