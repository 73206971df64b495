"""Numerical helpers shared by the oracles."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from src.domain.diffcore.tape import ParameterRegistry, Tape, backward, gradients
from src.domain.diffcore.tensor import Tensor

LossFn = Callable[[Tape], Tensor]


def relative_error(measured: np.ndarray, reference: np.ndarray) -> float:
    """||measured - reference|| / ||reference||; the absolute error when the reference is zero."""
    measured, reference = np.asarray(measured, dtype=np.float64), np.asarray(reference, dtype=np.float64)
    scale = float(np.linalg.norm(reference))
    diff = float(np.linalg.norm(measured - reference))
    return diff / scale if scale > 0 else diff


def parameter_gradient_check(
    registry: ParameterRegistry,
    loss: LossFn,
    indices: Sequence[int] | None = None,
    h: float = 1e-5,
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse-mode gradient and central differences of ``loss`` at the given flat positions."""
    tape = Tape(registry)
    analytic = backward(tape, loss(tape))
    base = registry.flat
    positions = range(base.size) if indices is None else indices
    numeric = []
    for position in positions:
        values = []
        for sign in (1.0, -1.0):
            shifted = base.copy()
            shifted[position] += sign * h
            registry.assign(shifted)
            values.append(loss(Tape(registry, recording=False)).item())
        numeric.append((values[0] - values[1]) / (2.0 * h))
    registry.assign(base)
    return analytic[list(positions)], np.asarray(numeric)


def input_gradient_check(fn: Callable[[Tensor], Tensor], x: np.ndarray, h: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    tape = Tape()
    leaf = tape.watch(x)
    (analytic,) = gradients(tape, fn(leaf), [leaf])
    numeric = np.zeros_like(x, dtype=np.float64)
    for index in np.ndindex(x.shape):
        plus, minus = x.astype(np.float64).copy(), x.astype(np.float64).copy()
        plus[index] += h
        minus[index] -= h
        numeric[index] = (fn(Tensor(plus)).item() - fn(Tensor(minus)).item()) / (2.0 * h)
    return analytic, numeric


def within_standard_errors(samples: np.ndarray, target: float, k: float = 3.0) -> tuple[float, float, bool]:
    """Sample mean, its standard error and whether |mean - target| <= k standard errors."""
    samples = np.asarray(samples, dtype=np.float64)
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(samples.size))
    slack = max(k * se, 1e-12 * max(1.0, abs(target)))
    return mean, se, abs(mean - target) <= slack


def randomize(registry: ParameterRegistry, prefixes: Sequence[str], rng: np.random.Generator, scale: float = 0.3) -> None:
    """Overwrite zero-initialized heads so gradients through them are not trivially zero."""
    for entry in registry.entries:
        if entry.name.startswith(tuple(prefixes)):
            registry.set(entry.name, rng.standard_normal(entry.shape) * scale)
