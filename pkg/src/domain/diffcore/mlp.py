from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.domain.diffcore.exceptions import ShapeMismatchException
from src.domain.diffcore.tape import ParameterRegistry, Tape, gradients
from src.domain.diffcore.tensor import Tensor, as_tensor, concat

Activation = Literal["softplus", "tanh", "identity"]


@dataclass(frozen=True)
class Mlp:
    """Fully connected network whose weights live in a parameter registry.

    Weights are stored as ``(in, out)`` matrices named ``{name}.w{i}`` with biases
    ``{name}.b{i}``. Hidden layers apply ``activation``; the output layer is linear.
    With ``time_input`` the scalar time is appended to the input as one extra column.
    """

    name: str
    widths: tuple[int, ...]
    activation: Activation = "softplus"
    time_input: bool = False

    def __post_init__(self):
        if len(self.widths) < 2 or any(width <= 0 for width in self.widths):
            raise ShapeMismatchException(op="mlp", left=tuple(self.widths), right=tuple(self.widths))

    @property
    def in_features(self) -> int:
        return self.widths[0] - (1 if self.time_input else 0)

    @property
    def out_features(self) -> int:
        return self.widths[-1]

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @classmethod
    def create(
        cls,
        registry: ParameterRegistry,
        name: str,
        widths: tuple[int, ...] | list[int],
        rng: np.random.Generator,
        activation: Activation = "softplus",
        time_input: bool = False,
        init_scale: float = 1.0,
        zero_output: bool = False,
    ) -> Mlp:
        spec = cls(name=name, widths=tuple(widths), activation=activation, time_input=time_input)
        for index, (fan_in, fan_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
            weight = rng.standard_normal((fan_in, fan_out)) * init_scale / np.sqrt(fan_in)
            if zero_output and index == spec.depth - 1:
                weight = np.zeros_like(weight)
            registry.register(f"{name}.w{index}", weight)
            registry.register(f"{name}.b{index}", np.zeros(fan_out))
        return spec

    def bind(self, tape: Tape) -> BoundMlp:
        weights = tuple(tape.param(f"{self.name}.w{index}") for index in range(self.depth))
        biases = tuple(tape.param(f"{self.name}.b{index}") for index in range(self.depth))
        return BoundMlp(spec=self, tape=tape, weights=weights, biases=biases)


@dataclass(frozen=True)
class BoundMlp:
    spec: Mlp
    tape: Tape
    weights: tuple[Tensor, ...]
    biases: tuple[Tensor, ...]

    def _inputs(self, z: Tensor, t: float) -> Tensor:
        if z.shape[-1] != self.spec.in_features:
            raise ShapeMismatchException(op=self.spec.name, left=z.shape, right=(self.spec.in_features,))
        if not self.spec.time_input:
            return z
        time_column = np.full(z.shape[:-1] + (1,), float(t))
        return concat([z, Tensor(time_column)], axis=-1)

    def _activate(self, a: Tensor) -> Tensor:
        if self.spec.activation == "softplus":
            return a.softplus()
        if self.spec.activation == "tanh":
            return a.tanh()
        return a

    def _derivative(self, a: Tensor, h: Tensor) -> Tensor | None:
        if self.spec.activation == "softplus":
            return (a - h).exp()
        if self.spec.activation == "tanh":
            return 1.0 - h.square()
        return None

    def __call__(self, z: Tensor, t: float = 0.0) -> Tensor:
        h = self._inputs(as_tensor(z), t)
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            h = h @ weight + bias
            if index < self.spec.depth - 1:
                h = self._activate(h)
        return h

    def with_tangents(self, z: Tensor, t: float, tangents: list[Tensor]) -> tuple[Tensor, list[Tensor]]:
        """Forward pass plus tangent propagation, all through recorded primitives.

        The activation derivative is shared by every tangent, so several directional
        derivatives cost one forward pass.
        """
        z = as_tensor(z)
        h = self._inputs(z, t)
        if self.spec.time_input:
            zero_time = Tensor(np.zeros(z.shape[:-1] + (1,)))
            dhs = [concat([as_tensor(v), zero_time], axis=-1) for v in tangents]
        else:
            dhs = [as_tensor(v) for v in tangents]
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            a = h @ weight + bias
            das = [dh @ weight for dh in dhs]
            if index < self.spec.depth - 1:
                h = self._activate(a)
                slope = self._derivative(a, h)
                dhs = das if slope is None else [slope * da for da in das]
            else:
                h, dhs = a, das
        return h, dhs


def jvp(f: BoundMlp, z: Tensor, t: float, v: Tensor) -> Tensor:
    z, v = as_tensor(z), as_tensor(v)
    if v.shape != z.shape:
        raise ShapeMismatchException(op="jvp", left=z.shape, right=v.shape)
    _, (tangent,) = f.with_tangents(z, t, [v])
    return tangent


def vjp(f: BoundMlp, z: Tensor, t: float, u: Tensor) -> Tensor:
    """Transpose-Jacobian product by a reverse sweep on a scratch tape."""
    u = as_tensor(u)
    scratch = Tape(registry=f.tape.registry)
    z_leaf = scratch.watch(as_tensor(z).value)
    out = f.spec.bind(scratch)(z_leaf, t)
    if out.shape != u.shape:
        raise ShapeMismatchException(op="vjp", left=out.shape, right=u.shape)
    (grad,) = gradients(scratch, (out * u.value).sum(), [z_leaf])
    return Tensor(grad)
