from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from scipy.special import logsumexp

from src.domain.base.values import BaseCompositeValueObject
from src.domain.latentode.values import ObservationSequence, SpiralBatch, SpiralSystem
from src.domain.synthdata.exceptions import InvalidSpecException

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _normal_log_pdf(x: np.ndarray, mean, std) -> np.ndarray:
    return -0.5 * np.square((x - mean) / std) - np.log(std) - HALF_LOG_2PI


@dataclass(frozen=True)
class MixtureSpec(BaseCompositeValueObject):
    weights: tuple[float, ...] = (0.3, 0.4, 0.3)
    means: tuple[float, ...] = (-2.0, 0.0, 2.0)
    stds: tuple[float, ...] = (0.4, 0.5, 0.4)

    def validate(self):
        if not self.weights or len({len(self.weights), len(self.means), len(self.stds)}) != 1:
            raise InvalidSpecException(field="components", value=(self.weights, self.means, self.stds))
        if any(w <= 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise InvalidSpecException(field="weights", value=self.weights)
        if any(not math.isfinite(m) for m in self.means):
            raise InvalidSpecException(field="means", value=self.means)
        if any(s <= 0 or not math.isfinite(s) for s in self.stds):
            raise InvalidSpecException(field="stds", value=self.stds)

    def log_density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)[..., None]
        terms = np.log(np.asarray(self.weights)) + _normal_log_pdf(x, np.asarray(self.means), np.asarray(self.stds))
        return logsumexp(terms, axis=-1)


def _corners(side: float = 4.0) -> tuple[tuple[float, float], ...]:
    half = side / 2.0
    return ((-half, -half), (half, -half), (-half, half), (half, half))


@dataclass(frozen=True)
class Labeled2dSpec(BaseCompositeValueObject):
    """One diagonal Gaussian per class."""

    means: tuple[tuple[float, float], ...] = _corners()
    stds: tuple[tuple[float, float], ...] = ((0.5, 0.5),) * 4
    samples_per_class: int = 500

    def validate(self):
        if len(self.means) < 2:
            raise InvalidSpecException(field="classes", value=len(self.means))
        if len(self.stds) != len(self.means):
            raise InvalidSpecException(field="stds", value=self.stds)
        if any(len(item) != 2 for item in (*self.means, *self.stds)):
            raise InvalidSpecException(field="dimension", value=(self.means, self.stds))
        if any(s <= 0 or not math.isfinite(s) for item in self.stds for s in item):
            raise InvalidSpecException(field="stds", value=self.stds)
        if self.samples_per_class < 1:
            raise InvalidSpecException(field="samples_per_class", value=self.samples_per_class)

    @property
    def num_classes(self) -> int:
        return len(self.means)

    def class_log_density(self, x, label: int) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return _normal_log_pdf(x, np.asarray(self.means[label]), np.asarray(self.stds[label])).sum(axis=-1)

    def log_density(self, x) -> np.ndarray:
        """Marginal over equally likely classes."""
        terms = np.stack([self.class_log_density(x, label) for label in range(self.num_classes)], axis=-1)
        return logsumexp(terms, axis=-1) - math.log(self.num_classes)


@dataclass(frozen=True)
class SpiralCorpusSpec(BaseCompositeValueObject):
    n_curves: int = 5000
    curve_length: int = 1000
    window: int = 200
    horizon: int = 100
    t_start: float = 0.05 * 2.0 * math.pi
    t_stop: float = 6.0 * math.pi
    noise: float = 0.3
    a_mean: float = 1.0
    a_std: float = 0.08
    b_mean: float = 0.25
    b_std: float = 0.03

    def validate(self):
        if self.n_curves < 2:
            raise InvalidSpecException(field="n_curves", value=self.n_curves)
        if self.window < 2 or self.horizon < 0 or self.window + self.horizon > self.curve_length:
            raise InvalidSpecException(field="window/horizon", value=(self.window, self.horizon))
        if not 0 < self.t_start < self.t_stop:
            raise InvalidSpecException(field="t_start/t_stop", value=(self.t_start, self.t_stop))
        for name in ("noise", "a_std", "b_std"):
            if getattr(self, name) < 0:
                raise InvalidSpecException(field=name, value=getattr(self, name))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_stop, self.curve_length)


@dataclass(frozen=True, eq=False)
class SpiralCorpus:
    """Ground-truth curves with one noisy contiguous observation window per curve."""

    spec: SpiralCorpusSpec
    systems: tuple[SpiralSystem, ...]
    curves: np.ndarray
    window_starts: np.ndarray
    windows: np.ndarray

    def __len__(self) -> int:
        return len(self.systems)

    @property
    def times(self) -> np.ndarray:
        return self.spec.times

    def window_times(self, index: int) -> np.ndarray:
        start = int(self.window_starts[index])
        return self.times[start : start + self.spec.window]

    def sequence(self, index: int) -> ObservationSequence:
        return ObservationSequence(times=self.window_times(index), points=self.windows[index])

    def batch(self, indices=None) -> SpiralBatch:
        indices = range(len(self)) if indices is None else indices
        return SpiralBatch.stack([self.sequence(int(i)) for i in indices], [self.systems[int(i)] for i in indices])

    def future(self, indices=None) -> tuple[np.ndarray, np.ndarray]:
        """Relative times and noiseless ground truth for the horizon after each window."""
        indices = np.arange(len(self)) if indices is None else np.asarray(indices)
        spacing = self.times[1] - self.times[0]
        offsets = np.arange(self.spec.window, self.spec.window + self.spec.horizon)
        truth = np.stack([self.curves[i, self.window_starts[i] + offsets] for i in indices])
        return offsets * spacing, truth

    @property
    def direction_counts(self) -> dict[str, int]:
        counts = {"clockwise": 0, "counter_clockwise": 0}
        for system in self.systems:
            counts[system.direction] += 1
        return counts
