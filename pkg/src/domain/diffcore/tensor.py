from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np

from src.domain.diffcore.exceptions import TapeMismatchException, UnknownPrimitiveException
from src.domain.diffcore.primitives import PRIMITIVES

if TYPE_CHECKING:
    from src.domain.diffcore.tape import Tape


class Tensor:
    """Dense float64 value, optionally bound to a node on a recording tape."""

    __slots__ = ("value", "node", "tape")
    __array_priority__ = 100.0

    def __init__(self, value: Any, node: int | None = None, tape: Tape | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.node = node
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def data(self) -> np.ndarray:
        return self.value.ravel()

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def is_recorded(self) -> bool:
        return self.node is not None and self.tape is not None

    def item(self) -> float:
        return float(self.value.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, recorded={self.is_recorded})"

    def __add__(self, other) -> Tensor:
        return forward("add", self, other)

    def __radd__(self, other) -> Tensor:
        return forward("add", other, self)

    def __sub__(self, other) -> Tensor:
        return forward("sub", self, other)

    def __rsub__(self, other) -> Tensor:
        return forward("sub", other, self)

    def __mul__(self, other) -> Tensor:
        if isinstance(other, (int, float)):
            return forward("scalar_mul", self, scalar=float(other))
        return forward("mul", self, other)

    def __rmul__(self, other) -> Tensor:
        return self.__mul__(other)

    def __truediv__(self, other) -> Tensor:
        if isinstance(other, (int, float)):
            return forward("scalar_mul", self, scalar=1.0 / float(other))
        return NotImplemented

    def __neg__(self) -> Tensor:
        return forward("scalar_mul", self, scalar=-1.0)

    def __matmul__(self, other) -> Tensor:
        return forward("matmul", self, other)

    def __rmatmul__(self, other) -> Tensor:
        return forward("matmul", other, self)

    def __getitem__(self, key) -> Tensor:
        return forward("slice", self, key=key)

    def sum(self, axis: int | None = None, keepdims: bool = False) -> Tensor:
        return forward("sum", self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> Tensor:
        return forward("mean", self, axis=axis, keepdims=keepdims)

    def exp(self) -> Tensor:
        return forward("exp", self)

    def log(self) -> Tensor:
        return forward("log", self)

    def tanh(self) -> Tensor:
        return forward("tanh", self)

    def softplus(self) -> Tensor:
        return forward("softplus", self)

    def sqrt(self) -> Tensor:
        return forward("sqrt", self)

    def square(self) -> Tensor:
        return forward("square", self)

    def logsumexp(self, axis: int | None = None, keepdims: bool = False) -> Tensor:
        return forward("logsumexp", self, axis=axis, keepdims=keepdims)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    return forward("concat", *tensors, axis=axis)


def forward(op_id: str, *inputs: Any, **attrs: Any) -> Tensor:
    rule = PRIMITIVES.get(op_id)
    if rule is None:
        raise UnknownPrimitiveException(op=op_id)
    tensors = [as_tensor(item) for item in inputs]
    tape = None
    for tensor in tensors:
        if not tensor.is_recorded:
            continue
        if tape is None:
            tape = tensor.tape
        elif tensor.tape is not tape:
            raise TapeMismatchException(op=op_id)
    values = tuple(tensor.value for tensor in tensors)
    out = np.asarray(rule.compute(*values, **attrs), dtype=np.float64)
    if tape is None or not tape.recording:
        return Tensor(out)
    node = tape.record(op_id, tuple(tensor.node for tensor in tensors), values, out, attrs)
    return Tensor(out, node=node, tape=tape)
