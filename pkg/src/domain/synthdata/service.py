from __future__ import annotations

from collections.abc import Callable
from dataclasses import replace

import numpy as np

from src.domain.latentode.service import gen_spiral
from src.domain.latentode.values import DIRECTIONS, SpiralSystem
from src.domain.synthdata.exceptions import InvalidSpecException, OddCurveCountException
from src.domain.synthdata.seeds import SeedStream, polar_normal
from src.domain.synthdata.values import Labeled2dSpec, MixtureSpec, SpiralCorpus, SpiralCorpusSpec

LogDensity = Callable[[np.ndarray], np.ndarray]


def gen_1d_mixture(spec: MixtureSpec, n: int, seed: int, split: str = "train") -> tuple[np.ndarray, LogDensity]:
    """n i.i.d. draws of shape (n, 1) and the exact mixture log-density."""
    if n < 1:
        raise InvalidSpecException(field="n", value=n)
    stream = SeedStream(seed)
    picker = stream.generator(f"mix1d.{split}.component")
    components = picker.choice(len(spec.weights), size=n, p=np.asarray(spec.weights))
    noise = stream.normal(f"mix1d.{split}.noise", n)
    samples = np.asarray(spec.means)[components] + np.asarray(spec.stds)[components] * noise
    return samples[:, None], spec.log_density


def gen_2d_labeled(
    spec: Labeled2dSpec,
    seed: int,
    split: str = "train",
) -> tuple[np.ndarray, np.ndarray, Callable[[np.ndarray, int], np.ndarray]]:
    """Exactly ``samples_per_class`` points per class, shuffled, with the exact per-class log-density."""
    stream = SeedStream(seed)
    labels = np.repeat(np.arange(spec.num_classes), spec.samples_per_class)
    noise = stream.normal(f"labeled2d.{split}.noise", (labels.size, 2))
    points = np.asarray(spec.means)[labels] + np.asarray(spec.stds)[labels] * noise
    order = stream.generator(f"labeled2d.{split}.order").permutation(labels.size)
    return points[order], labels[order], spec.class_log_density


def gen_spiral_corpus(spec: SpiralCorpusSpec, seed: int, split: str = "train") -> SpiralCorpus:
    """Half clockwise, half counter-clockwise systems with noisy contiguous windows.

    Each split draws from its own named streams so train and test corpora never share draws.
    """
    if spec.n_curves % 2:
        raise OddCurveCountException(n_curves=spec.n_curves)
    stream = SeedStream(seed)
    n = spec.n_curves
    directions = np.repeat(np.arange(len(DIRECTIONS)), n // 2)
    directions = directions[stream.generator(f"spirals.{split}.order").permutation(n)]
    a = spec.a_mean + spec.a_std * polar_normal(stream.generator(f"spirals.{split}.a"), n)
    b = spec.b_mean + spec.b_std * polar_normal(stream.generator(f"spirals.{split}.b"), n)
    systems = tuple(
        SpiralSystem(a=float(a[i]), b=float(b[i]), direction=DIRECTIONS[directions[i]]) for i in range(n)
    )
    times = spec.times
    curves = np.stack([np.stack(gen_spiral(system, times), axis=-1) for system in systems])
    latest_start = spec.curve_length - spec.window - spec.horizon
    starts = stream.generator(f"spirals.{split}.window").integers(0, latest_start + 1, size=n)
    offsets = np.arange(spec.window)
    clean = np.stack([curves[i, starts[i] + offsets] for i in range(n)])
    noise = spec.noise * polar_normal(stream.generator(f"spirals.{split}.noise"), clean.shape)
    return SpiralCorpus(spec=spec, systems=systems, curves=curves, window_starts=starts, windows=clean + noise)


def gen_spiral_corpora(spec: SpiralCorpusSpec, test_curves: int, seed: int) -> tuple[SpiralCorpus, SpiralCorpus]:
    return gen_spiral_corpus(spec, seed, "train"), gen_spiral_corpus(replace(spec, n_curves=test_curves), seed, "test")
