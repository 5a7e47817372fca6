"""Op registry: the named catalog behind ``op_apply``."""

import inspect
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Type

from pydantic import BaseModel, ConfigDict, ValidationError, create_model

from avrelscore.core.exceptions import ShapeError
from avrelscore.tensor.tensor import Tensor

logger = logging.getLogger(__name__)

# strict so that "2" is not silently read as a stride of 2
ATTR_MODEL_CONFIG = ConfigDict(strict=True, extra="forbid", arbitrary_types_allowed=True)


@dataclass
class OpDefinition:
    """A registered tensor op."""

    name: str
    handler: Callable[..., Tensor]
    attr_model: Type[BaseModel]
    description: str = ""
    variadic: bool = False

    @property
    def attr_names(self) -> List[str]:
        return list(self.attr_model.model_fields)


class OpRegistry:
    """
    Registry for tensor ops.

    Manages op registration, attribute validation and dispatch by name.
    """

    def __init__(self):
        self._ops: Dict[str, OpDefinition] = {}

    def register(
        self,
        name: str,
        handler: Callable[..., Tensor],
        description: str = "",
        variadic: bool = False,
        attr_model: Optional[Type[BaseModel]] = None,
    ) -> None:
        """
        Register an op.

        Args:
            name: Catalog name
            handler: Function taking input tensors then keyword attributes
            description: Human-readable description
            variadic: Whether the op takes a list of tensors as its first argument
            attr_model: Pydantic model for the attributes; generated from the
                handler's keyword-only parameters if not provided
        """
        if attr_model is None:
            attr_model = self._generate_attr_model(name, handler)
        self._ops[name] = OpDefinition(
            name=name,
            handler=handler,
            attr_model=attr_model,
            description=description or f"Apply {name}",
            variadic=variadic,
        )
        logger.debug(f"Registered op: {name}")

    def _generate_attr_model(self, name: str, handler: Callable[..., Tensor]) -> Type[BaseModel]:
        """Generate a Pydantic model from the keyword-only part of the signature."""
        fields = {}
        for param in inspect.signature(handler).parameters.values():
            if param.kind != inspect.Parameter.KEYWORD_ONLY:
                continue
            annotation = Any if param.annotation is inspect.Parameter.empty else param.annotation
            default = ... if param.default is inspect.Parameter.empty else param.default
            fields[param.name] = (annotation, default)
        model_name = "".join(part.title() for part in name.split("_")) + "Attrs"
        return create_model(model_name, __config__=ATTR_MODEL_CONFIG, **fields)

    def op(self, description: str = "", name: Optional[str] = None, variadic: bool = False):
        """
        Decorator for registering ops.

        Usage:
            @catalog.op("Elementwise logistic function")
            def sigmoid(x: Tensor) -> Tensor:
                ...
        """
        def decorator(func: Callable[..., Tensor]):
            self.register(
                name=name or func.__name__,
                handler=func,
                description=description,
                variadic=variadic,
            )
            return func
        return decorator

    def get_op(self, name: str) -> Optional[OpDefinition]:
        return self._ops.get(name)

    def get_op_names(self) -> List[str]:
        return list(self._ops.keys())

    def validate_attrs(self, definition: OpDefinition, inputs: Sequence[Tensor], attrs: Mapping[str, Any]) -> Dict[str, Any]:
        """Validate attributes against the op's model; only the given keys are returned."""
        try:
            validated = definition.attr_model.model_validate(dict(attrs))
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise ShapeError(
                definition.name,
                [tuple(t.shape) for t in inputs],
                reason=f"invalid attributes ({problems})",
            ) from e
        return {key: getattr(validated, key) for key in attrs}

    def apply(
        self,
        name: str,
        inputs: Sequence[Tensor],
        attrs: Optional[Mapping[str, Any]] = None,
    ) -> Tensor:
        """
        Apply an op by name.

        Args:
            name: Catalog name
            inputs: Input tensors
            attrs: Op attributes

        Returns:
            Output tensor
        """
        definition = self._ops.get(name)
        if definition is None:
            raise ShapeError(name, [tuple(t.shape) for t in inputs], reason="unknown op")
        kwargs = self.validate_attrs(definition, inputs, attrs or {})
        try:
            if definition.variadic:
                return definition.handler(list(inputs), **kwargs)
            return definition.handler(*inputs, **kwargs)
        except (ValueError, IndexError, TypeError) as e:
            raise ShapeError(name, [tuple(t.shape) for t in inputs], reason=str(e)) from e


CATALOG = OpRegistry()


def op_apply(
    op: str,
    inputs: Sequence[Tensor],
    attrs: Optional[Mapping[str, Any]] = None,
) -> Tensor:
    """Apply a catalog member to input tensors."""
    # importing ops populates the catalog
    from avrelscore.tensor import ops  # noqa: F401
    return CATALOG.apply(op, inputs, attrs)
