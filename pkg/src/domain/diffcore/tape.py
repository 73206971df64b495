from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.domain.diffcore.exceptions import (
    DuplicateParameterException,
    NonScalarRootException,
    NotRecordingException,
    ShapeMismatchException,
    UnknownParameterException,
)
from src.domain.diffcore.primitives import PRIMITIVES
from src.domain.diffcore.tensor import Tensor, as_tensor

PARAM_OP = "param"
LEAF_OP = "leaf"


@dataclass(frozen=True)
class ParameterEntry:
    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def stop(self) -> int:
        return self.offset + self.size

    def to_dict(self) -> dict:
        return {"name": self.name, "offset": self.offset, "shape": list(self.shape)}


class ParameterRegistry:
    """Named slices into one flat float64 parameter vector."""

    def __init__(self) -> None:
        self._entries: dict[str, ParameterEntry] = {}
        self._flat = np.zeros(0, dtype=np.float64)

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def size(self) -> int:
        return int(self._flat.size)

    @property
    def flat(self) -> np.ndarray:
        return self._flat.copy()

    @property
    def entries(self) -> list[ParameterEntry]:
        return list(self._entries.values())

    def names(self) -> list[str]:
        return list(self._entries)

    def register(self, name: str, value: Any) -> ParameterEntry:
        if name in self._entries:
            raise DuplicateParameterException(name=name)
        array = np.asarray(value, dtype=np.float64)
        entry = ParameterEntry(name=name, offset=self.size, shape=tuple(array.shape))
        self._entries[name] = entry
        self._flat = np.concatenate([self._flat, array.ravel()])
        return entry

    def entry(self, name: str) -> ParameterEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownParameterException(name=name)

    def get(self, name: str) -> np.ndarray:
        entry = self.entry(name)
        return self._flat[entry.offset : entry.stop].reshape(entry.shape).copy()

    def set(self, name: str, value: Any) -> None:
        entry = self.entry(name)
        array = np.asarray(value, dtype=np.float64)
        if array.shape != entry.shape:
            raise ShapeMismatchException(op="set", left=entry.shape, right=array.shape)
        flat = self._flat.copy()
        flat[entry.offset : entry.stop] = array.ravel()
        self._flat = flat

    def assign(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != self._flat.shape:
            raise ShapeMismatchException(op="assign", left=self._flat.shape, right=flat.shape)
        self._flat = flat.copy()

    def count(self, prefix: str = "") -> int:
        return sum(entry.size for entry in self._entries.values() if entry.name.startswith(prefix))

    def mask(self, prefixes: Iterable[str]) -> np.ndarray:
        """Boolean mask over the flat vector selecting every parameter under the given prefixes."""
        selected = np.zeros(self.size, dtype=bool)
        prefixes = tuple(prefixes)
        for entry in self._entries.values():
            if entry.name.startswith(prefixes):
                selected[entry.offset : entry.stop] = True
        return selected

    def to_manifest(self) -> list[dict]:
        return [entry.to_dict() for entry in self._entries.values()]

    @classmethod
    def from_manifest(cls, entries: Sequence[dict], flat: np.ndarray) -> ParameterRegistry:
        registry = cls()
        for item in entries:
            shape = tuple(item["shape"])
            size = int(np.prod(shape, dtype=np.int64))
            offset = int(item["offset"])
            registry.register(item["name"], np.asarray(flat[offset : offset + size]).reshape(shape))
        return registry


@dataclass
class Node:
    op: str
    inputs: tuple[int | None, ...]
    values: tuple[np.ndarray, ...]
    out: np.ndarray
    attrs: dict[str, Any] = field(default_factory=dict)
    parameter: ParameterEntry | None = None


class Tape:
    """Append-only record of primitive applications for one reverse sweep."""

    def __init__(self, registry: ParameterRegistry | None = None, recording: bool = True) -> None:
        self.registry = registry if registry is not None else ParameterRegistry()
        self.recording = recording
        self.nodes: list[Node] = []
        self._params: dict[str, Tensor] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def record(
        self,
        op: str,
        inputs: tuple[int | None, ...],
        values: tuple[np.ndarray, ...],
        out: np.ndarray,
        attrs: dict[str, Any],
    ) -> int:
        self.nodes.append(Node(op=op, inputs=inputs, values=values, out=out, attrs=dict(attrs)))
        return len(self.nodes) - 1

    def param(self, name: str) -> Tensor:
        cached = self._params.get(name)
        if cached is not None:
            return cached
        value = self.registry.get(name)
        if not self.recording:
            tensor = Tensor(value)
        else:
            self.nodes.append(
                Node(op=PARAM_OP, inputs=(), values=(), out=value, parameter=self.registry.entry(name))
            )
            tensor = Tensor(value, node=len(self.nodes) - 1, tape=self)
        self._params[name] = tensor
        return tensor

    def watch(self, value: Any) -> Tensor:
        array = np.array(as_tensor(value).value, dtype=np.float64)
        if not self.recording:
            return Tensor(array)
        self.nodes.append(Node(op=LEAF_OP, inputs=(), values=(), out=array))
        return Tensor(array, node=len(self.nodes) - 1, tape=self)


def _sweep(tape: Tape, root: Tensor) -> dict[int, np.ndarray]:
    if root.value.size != 1:
        raise NonScalarRootException(shape=root.shape)
    if not tape.recording:
        raise NotRecordingException()
    adjoints: dict[int, np.ndarray] = {}
    if root.node is None or root.tape is not tape:
        return adjoints
    adjoints[root.node] = np.ones_like(root.value)
    for index in range(root.node, -1, -1):
        grad = adjoints.get(index)
        if grad is None:
            continue
        node = tape.nodes[index]
        if node.op in (PARAM_OP, LEAF_OP):
            continue
        input_grads = PRIMITIVES[node.op].vjp(grad, node.out, *node.values, **node.attrs)
        for input_node, input_grad in zip(node.inputs, input_grads):
            if input_node is None or input_grad is None:
                continue
            previous = adjoints.get(input_node)
            adjoints[input_node] = input_grad if previous is None else previous + input_grad
    return adjoints


def backward(tape: Tape, root: Tensor) -> np.ndarray:
    """Gradient of a scalar root w.r.t. every registered parameter, aligned with the flat vector."""
    adjoints = _sweep(tape, root)
    grad = np.zeros(tape.registry.size, dtype=np.float64)
    for index, adjoint in adjoints.items():
        entry = tape.nodes[index].parameter
        if entry is not None:
            grad[entry.offset : entry.stop] += np.asarray(adjoint).ravel()
    return grad


def gradients(tape: Tape, root: Tensor, wrt: Sequence[Tensor]) -> list[np.ndarray]:
    adjoints = _sweep(tape, root)
    result = []
    for tensor in wrt:
        adjoint = adjoints.get(tensor.node) if tensor.tape is tape and tensor.node is not None else None
        result.append(np.zeros_like(tensor.value) if adjoint is None else np.array(adjoint, dtype=np.float64))
    return result
