"""Parameters, modules and the generic layers built from catalog ops."""

import logging
import math
from collections import OrderedDict
from typing import Dict, Iterator, Literal, Optional, Tuple

import numpy as np

from avrelscore.core.exceptions import AVRelScoreError, ShapeError
from avrelscore.tensor import ops
from avrelscore.tensor.tensor import Tensor

logger = logging.getLogger(__name__)

InitSpec = Literal["uniform_fan_in", "zeros", "ones"]


class Parameter(Tensor):
    """A named learnable tensor; always requires grad."""

    def __init__(self, data: np.ndarray, name: str = "", init_spec: InitSpec = "zeros"):
        super().__init__(data, requires_grad=True, name=name)
        self.init_spec = init_spec


def init_array(shape: Tuple[int, ...], spec: InitSpec, rng: np.random.Generator, fan_in: int = 1) -> np.ndarray:
    """
    Initialise a parameter array.

    Args:
        shape: Parameter shape
        spec: Initialiser name
        rng: Random generator
        fan_in: Fan-in used to scale uniform initialisation

    Returns:
        Initial values
    """
    if spec == "zeros":
        return np.zeros(shape)
    if spec == "ones":
        return np.ones(shape)
    if spec == "uniform_fan_in":
        bound = 1.0 / math.sqrt(max(fan_in, 1))
        return rng.uniform(-bound, bound, size=shape)
    raise AVRelScoreError(f"Unknown initialiser: {spec}")


class Module:
    """
    Container of parameters, buffers and child modules.

    Parameters and child modules assigned as attributes are registered in
    assignment order, which fixes the order of ``named_parameters``.
    """

    def __init__(self):
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "_buffers", OrderedDict())
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def add_parameter(
        self,
        name: str,
        shape: Tuple[int, ...],
        init: InitSpec,
        rng: np.random.Generator,
        fan_in: int = 1,
    ) -> Parameter:
        param = Parameter(init_array(shape, init, rng, fan_in), name=name, init_spec=init)
        setattr(self, name, param)
        return param

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, param in self._parameters.items():
            yield f"{prefix}{name}", param
        for name, module in self._modules.items():
            yield from module.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> Iterator[Parameter]:
        for _, param in self.named_parameters():
            yield param

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, buf in self._buffers.items():
            yield f"{prefix}{name}", buf
        for name, module in self._modules.items():
            yield from module.named_buffers(f"{prefix}{name}.")

    def train(self, mode: bool = True) -> "Module":
        object.__setattr__(self, "training", mode)
        for module in self._modules.values():
            module.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def name_parameters(self) -> None:
        """Stamp each parameter with its qualified name."""
        for name, param in self.named_parameters():
            param.name = name

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Parameters then buffers, by qualified name."""
        state: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, param in self.named_parameters():
            state[name] = param.data
        for name, buf in self.named_buffers():
            state[name] = buf
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy values in place; names and shapes must match exactly."""
        own = self.state_dict()
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise AVRelScoreError(
                "Checkpoint does not match model",
                details=f"missing={missing[:5]} unexpected={extra[:5]}",
                recoverable=False,
            )
        for name, target in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != target.shape:
                raise ShapeError("load_state_dict", [target.shape, value.shape], reason=f"'{name}' differs")
            target[...] = value

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))


class Linear(Module):
    """y = x W + b on the last axis."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.add_parameter("weight", (d_in, d_out), "uniform_fan_in", rng, fan_in=d_in)
        self.bias = self.add_parameter("bias", (d_out,), "zeros", rng) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        return ops.add(y, self.bias) if self.bias is not None else y


class Conv1d(Module):
    """Time-major 1D convolution layer."""

    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        groups: int = 1,
        bias: bool = True,
    ):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.groups = groups
        fan_in = (c_in // groups) * kernel
        self.add_parameter("weight", (c_out, c_in // groups, kernel), "uniform_fan_in", rng, fan_in=fan_in)
        self.bias = self.add_parameter("bias", (c_out,), "zeros", rng) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv1d(x, self.weight, self.bias, stride=self.stride, padding=self.padding, groups=self.groups)


class Conv2d(Module):
    """2D convolution over a batch of single frames."""

    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.add_parameter("weight", (c_out, c_in, kernel, kernel), "uniform_fan_in", rng, fan_in=c_in * kernel * kernel)
        self.add_parameter("bias", (c_out,), "zeros", rng)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class LayerNorm(Module):
    def __init__(self, d: int, rng: np.random.Generator):
        super().__init__()
        self.add_parameter("gamma", (d,), "ones", rng)
        self.add_parameter("beta", (d,), "zeros", rng)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta)


class BatchNorm1d(Module):
    """Batch norm over time for [T x C] features; momentum 0.1, frozen in eval."""

    def __init__(self, c: int, rng: np.random.Generator, momentum: float = 0.1):
        super().__init__()
        self.momentum = momentum
        self.add_parameter("gamma", (c,), "ones", rng)
        self.add_parameter("beta", (c,), "zeros", rng)
        self.register_buffer("running_mean", np.zeros(c))
        self.register_buffer("running_var", np.ones(c))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.batch_norm(
            x,
            self.gamma,
            self.beta,
            running_mean=self.running_mean,
            running_var=self.running_var,
            training=self.training,
            momentum=self.momentum,
        )


class Embedding(Module):
    def __init__(self, vocab: int, d: int, rng: np.random.Generator):
        super().__init__()
        self.add_parameter("table", (vocab, d), "uniform_fan_in", rng, fan_in=d)

    def __call__(self, ids) -> Tensor:
        return ops.embedding_lookup(self.table, ids=ids)
