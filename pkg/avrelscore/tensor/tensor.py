"""Dense float64 tensor with a reverse-mode gradient tape."""

import itertools
import logging
import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from avrelscore.core.exceptions import AVRelScoreError, GradientError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

# Node ids grow monotonically, so every node outranks its parents; reverse id
# order is a deterministic reverse-topological order.
_node_ids = itertools.count()
_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording inside the block."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor:
    """
    Dense n-dimensional float64 array that can participate in the gradient tape.

    Attributes:
        data: Contiguous float64 values
        requires_grad: Whether gradients flow to this tensor
        grad: Accumulated gradient (same shape) once backward has run
    """

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.op: Optional[str] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._id = next(_node_ids)

    # Shape helpers

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        """Copy of the values, detached from the tape."""
        return self.data.copy()

    def item(self) -> float:
        if self.size != 1:
            raise AVRelScoreError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate gradients of every reachable leaf from this scalar."""
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        op = f" op={self.op}" if self.op else ""
        return f"Tensor(shape={self.shape}{label}{op}, requires_grad={self.requires_grad})"

    # Operator sugar; the catalog in ops.py holds the definitions

    def __add__(self, other):
        from avrelscore.tensor import ops
        return ops.add(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        from avrelscore.tensor import ops
        return ops.sub(self, as_tensor(other))

    def __rsub__(self, other):
        from avrelscore.tensor import ops
        return ops.sub(as_tensor(other), self)

    def __mul__(self, other):
        from avrelscore.tensor import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, factor=float(other))
        return ops.hadamard(self, as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        from avrelscore.tensor import ops
        if not isinstance(other, (int, float)):
            raise AVRelScoreError("Tensor division is only defined by a scalar")
        return ops.scale(self, factor=1.0 / float(other))

    def __neg__(self):
        from avrelscore.tensor import ops
        return ops.scale(self, factor=-1.0)

    def __matmul__(self, other):
        from avrelscore.tensor import ops
        return ops.matmul(self, as_tensor(other))

    @property
    def T(self) -> "Tensor":
        from avrelscore.tensor import ops
        return ops.transpose(self)


def as_tensor(value: Union["Tensor", ArrayLike]) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def make_result(
    op: str,
    data: np.ndarray,
    parents: Sequence[Tensor],
    backward_fn: BackwardFn,
) -> Tensor:
    """
    Wrap an op's forward value and record a tape node when needed.

    Args:
        op: Catalog name of the op
        data: Forward value
        parents: Input tensors, in the order backward_fn returns gradients
        backward_fn: Maps the output gradient to per-parent gradients

    Returns:
        Output tensor
    """
    data = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise GradientError(op, f"Op '{op}' produced non-finite values")
    out = Tensor(data)
    out.op = op
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _reachable(root: Tensor) -> List[Tensor]:
    seen = {root._id: root}
    stack = [root]
    while stack:
        node = stack.pop()
        for parent in node._parents:
            if parent.requires_grad and parent._id not in seen:
                seen[parent._id] = parent
                stack.append(parent)
    return [seen[k] for k in sorted(seen, reverse=True)]


def backward(loss: Tensor) -> None:
    """
    Reverse traversal from a scalar loss.

    Gradients accumulate additively into ``.grad`` of every reachable leaf that
    requires grad, both across multiple uses within one graph and across calls.

    Args:
        loss: Scalar tensor produced by catalog ops
    """
    if loss.size != 1:
        raise GradientError("loss", f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise GradientError("loss", "backward() called on a tensor with an empty tape")

    pending = {loss._id: np.ones_like(loss.data)}
    for node in _reachable(loss):
        grad = pending.pop(node._id, None)
        if grad is None:
            continue
        if node.is_leaf:
            if not np.all(np.isfinite(grad)):
                raise GradientError(node.name or f"tensor#{node._id}")
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        parent_grads = node._backward(grad)
        for parent, pgrad in zip(node._parents, parent_grads):
            if pgrad is None or not parent.requires_grad:
                continue
            if pgrad.shape != parent.shape:
                pgrad = pgrad.reshape(parent.shape)
            if parent._id in pending:
                pending[parent._id] = pending[parent._id] + pgrad
            else:
                pending[parent._id] = pgrad
