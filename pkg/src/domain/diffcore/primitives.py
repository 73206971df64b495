"""Primitive rules: forward computation and vector-Jacobian product on float64 arrays.

Every differentiable operation in the package is one of the rules registered here,
so tangent (jvp) computations built from them stay first-order differentiable.
"""

from abc import ABC, abstractmethod
from typing import Any, ClassVar, Type

import numpy as np

from src.domain.diffcore.exceptions import DomainErrorException, ShapeMismatchException

Grads = tuple[np.ndarray | None, ...]


class PrimitiveRule(ABC):
    name: ClassVar[str]

    @staticmethod
    @abstractmethod
    def compute(*values: np.ndarray, **attrs: Any) -> np.ndarray: ...

    @staticmethod
    @abstractmethod
    def vjp(grad: np.ndarray, out: np.ndarray, *values: np.ndarray, **attrs: Any) -> Grads: ...


PRIMITIVES: dict[str, Type[PrimitiveRule]] = {}


def primitive(rule: Type[PrimitiveRule]) -> Type[PrimitiveRule]:
    PRIMITIVES[rule.name] = rule
    return rule


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op: str, a: np.ndarray, b: np.ndarray) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchException(op=op, left=a.shape, right=b.shape)


def _expand_reduced(grad: np.ndarray, shape: tuple[int, ...], axis: int | None, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape)


def _sigmoid(a: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * a))


@primitive
class Add(PrimitiveRule):
    name = "add"

    @staticmethod
    def compute(a, b, **attrs):
        _check_broadcast("add", a, b)
        return a + b

    @staticmethod
    def vjp(grad, out, a, b, **attrs):
        return unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)


@primitive
class Sub(PrimitiveRule):
    name = "sub"

    @staticmethod
    def compute(a, b, **attrs):
        _check_broadcast("sub", a, b)
        return a - b

    @staticmethod
    def vjp(grad, out, a, b, **attrs):
        return unbroadcast(grad, a.shape), unbroadcast(-grad, b.shape)


@primitive
class Mul(PrimitiveRule):
    name = "mul"

    @staticmethod
    def compute(a, b, **attrs):
        _check_broadcast("mul", a, b)
        return a * b

    @staticmethod
    def vjp(grad, out, a, b, **attrs):
        return unbroadcast(grad * b, a.shape), unbroadcast(grad * a, b.shape)


@primitive
class ScalarMul(PrimitiveRule):
    name = "scalar_mul"

    @staticmethod
    def compute(a, *, scalar: float):
        return a * scalar

    @staticmethod
    def vjp(grad, out, a, *, scalar: float):
        return (grad * scalar,)


@primitive
class MatMul(PrimitiveRule):
    name = "matmul"

    @staticmethod
    def compute(a, b, **attrs):
        if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
            raise ShapeMismatchException(op="matmul", left=a.shape, right=b.shape)
        return a @ b

    @staticmethod
    def vjp(grad, out, a, b, **attrs):
        if a.ndim == 2 and b.ndim == 2:
            return grad @ b.T, a.T @ grad
        if a.ndim == 2:
            return np.outer(grad, b), a.T @ grad
        if b.ndim == 2:
            return b @ grad, np.outer(a, grad)
        return grad * b, grad * a


@primitive
class Softplus(PrimitiveRule):
    name = "softplus"

    @staticmethod
    def compute(a, **attrs):
        return np.logaddexp(0.0, a)

    @staticmethod
    def vjp(grad, out, a, **attrs):
        return (grad * _sigmoid(a),)


@primitive
class Tanh(PrimitiveRule):
    name = "tanh"

    @staticmethod
    def compute(a, **attrs):
        return np.tanh(a)

    @staticmethod
    def vjp(grad, out, a, **attrs):
        return (grad * (1.0 - out * out),)


@primitive
class Exp(PrimitiveRule):
    name = "exp"

    @staticmethod
    def compute(a, **attrs):
        return np.exp(a)

    @staticmethod
    def vjp(grad, out, a, **attrs):
        return (grad * out,)


@primitive
class Log(PrimitiveRule):
    name = "log"

    @staticmethod
    def compute(a, **attrs):
        if a.size and np.min(a) <= 0.0:
            raise DomainErrorException(op="log", minimum=float(np.min(a)))
        return np.log(a)

    @staticmethod
    def vjp(grad, out, a, **attrs):
        return (grad / a,)


@primitive
class Square(PrimitiveRule):
    name = "square"

    @staticmethod
    def compute(a, **attrs):
        return a * a

    @staticmethod
    def vjp(grad, out, a, **attrs):
        return (2.0 * a * grad,)


@primitive
class Sqrt(PrimitiveRule):
    name = "sqrt"

    @staticmethod
    def compute(a, **attrs):
        if a.size and np.min(a) < 0.0:
            raise DomainErrorException(op="sqrt", minimum=float(np.min(a)))
        return np.sqrt(a)

    @staticmethod
    def vjp(grad, out, a, **attrs):
        return (grad / (2.0 * out),)


@primitive
class Sum(PrimitiveRule):
    name = "sum"

    @staticmethod
    def compute(a, *, axis: int | None = None, keepdims: bool = False):
        return np.asarray(np.sum(a, axis=axis, keepdims=keepdims))

    @staticmethod
    def vjp(grad, out, a, *, axis: int | None = None, keepdims: bool = False):
        return (_expand_reduced(grad, a.shape, axis, keepdims),)


@primitive
class Mean(PrimitiveRule):
    name = "mean"

    @staticmethod
    def compute(a, *, axis: int | None = None, keepdims: bool = False):
        return np.asarray(np.mean(a, axis=axis, keepdims=keepdims))

    @staticmethod
    def vjp(grad, out, a, *, axis: int | None = None, keepdims: bool = False):
        count = a.size if axis is None else a.shape[axis]
        return (_expand_reduced(grad, a.shape, axis, keepdims) / count,)


@primitive
class Concat(PrimitiveRule):
    name = "concat"

    @staticmethod
    def compute(*values, axis: int = -1):
        reference = values[0]
        for other in values[1:]:
            if other.ndim != reference.ndim or any(
                left != right
                for position, (left, right) in enumerate(zip(reference.shape, other.shape))
                if position != axis % reference.ndim
            ):
                raise ShapeMismatchException(op="concat", left=reference.shape, right=other.shape)
        return np.concatenate(values, axis=axis)

    @staticmethod
    def vjp(grad, out, *values, axis: int = -1):
        boundaries = np.cumsum([value.shape[axis] for value in values])[:-1]
        return tuple(np.split(grad, boundaries, axis=axis))


@primitive
class Slice(PrimitiveRule):
    name = "slice"

    @staticmethod
    def compute(a, *, key):
        return np.array(a[key], dtype=np.float64)

    @staticmethod
    def vjp(grad, out, a, *, key):
        full = np.zeros_like(a)
        if _is_basic_index(key):
            full[key] += grad
        else:
            np.add.at(full, key, grad)
        return (full,)


def _is_basic_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(part, (int, np.integer, slice)) or part is Ellipsis or part is None for part in parts)


@primitive
class LogSumExp(PrimitiveRule):
    name = "logsumexp"

    @staticmethod
    def compute(a, *, axis: int | None = None, keepdims: bool = False):
        peak = np.max(a, axis=axis, keepdims=True)
        peak = np.where(np.isfinite(peak), peak, 0.0)
        total = np.log(np.sum(np.exp(a - peak), axis=axis, keepdims=True)) + peak
        if not keepdims:
            total = np.squeeze(total, axis=axis) if axis is not None else total.reshape(())
        return np.asarray(total)

    @staticmethod
    def vjp(grad, out, a, *, axis: int | None = None, keepdims: bool = False):
        expanded_out = _expand_reduced(out, a.shape, axis, keepdims)
        expanded_grad = _expand_reduced(grad, a.shape, axis, keepdims)
        return (expanded_grad * np.exp(a - expanded_out),)
