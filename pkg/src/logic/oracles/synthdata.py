from __future__ import annotations

import numpy as np

from src.domain.synthdata.service import gen_1d_mixture, gen_2d_labeled, gen_spiral_corpus
from src.domain.synthdata.values import Labeled2dSpec, MixtureSpec, SpiralCorpusSpec
from src.domain.train.service import normalization_grid, riemann_area
from src.logic.oracles.registry import OracleOutcome, oracle

SPIRAL_SEED = 51


@oracle("synthdata.mixture_normalization", criterion="normalization")
def mixture_normalization() -> OracleOutcome:
    area = riemann_area(MixtureSpec().log_density, -10.0, 10.0, 1e-3)
    error = abs(area - 1.0)
    return OracleOutcome(measured=area, expected=1.0, tolerance=1e-6, passed=error <= 1e-6)


@oracle("synthdata.class_normalization", criterion="normalization")
def class_normalization() -> OracleOutcome:
    spec = Labeled2dSpec()
    step, worst = 0.01, 0.0
    for label in range(spec.num_classes):
        mean, std = np.asarray(spec.means[label]), np.asarray(spec.stds[label])
        xs = normalization_grid(mean[0] - 8 * std[0], mean[0] + 8 * std[0], step)
        ys = normalization_grid(mean[1] - 8 * std[1], mean[1] + 8 * std[1], step)
        grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
        area = float(np.exp(spec.class_log_density(grid, label)).sum() * step * step)
        worst = max(worst, abs(area - 1.0))
    return OracleOutcome(measured=worst, expected=0.0, tolerance=1e-4, passed=worst <= 1e-4)


@oracle("synthdata.mixture_moments")
def mixture_moments() -> OracleOutcome:
    spec = MixtureSpec()
    samples, _ = gen_1d_mixture(spec, 100_000, seed=52)
    weights, means, stds = (np.asarray(item) for item in (spec.weights, spec.means, spec.stds))
    expected = float(weights @ means)
    variance = float(weights @ (stds**2 + means**2)) - expected**2
    se = np.sqrt(variance / samples.size)
    gap = abs(float(samples.mean()) - expected)
    return OracleOutcome(measured=float(samples.mean()), expected=expected, tolerance=3 * se, passed=gap <= 3 * se)


@oracle("synthdata.labeled_balance")
def labeled_balance() -> OracleOutcome:
    spec = Labeled2dSpec(samples_per_class=250)
    points, labels, _ = gen_2d_labeled(spec, seed=53)
    counts = np.bincount(labels, minlength=spec.num_classes)
    centroids = np.stack([points[labels == label].mean(axis=0) for label in range(spec.num_classes)])
    drift = float(np.max(np.abs(centroids - np.asarray(spec.means))))
    return OracleOutcome(
        measured=drift, expected=0.0, tolerance=0.15,
        passed=bool(np.all(counts == spec.samples_per_class)) and drift <= 0.15,
        detail=f"class counts {counts.tolist()}",
    )


@oracle("synthdata.spiral_statistics", criterion="spiral-extrapolation")
def spiral_statistics() -> OracleOutcome:
    """Balanced directions, noise at its nominal level and contiguous in-range windows."""
    spec = SpiralCorpusSpec()
    corpus = gen_spiral_corpus(spec, SPIRAL_SEED)
    offsets = np.arange(spec.window)
    clean = np.stack([corpus.curves[i, corpus.window_starts[i] + offsets] for i in range(len(corpus))])
    noise_std = float(np.std(corpus.windows - clean))
    counts = corpus.direction_counts
    in_range = bool(np.all(corpus.window_starts + spec.window + spec.horizon <= spec.curve_length))
    balanced = counts["clockwise"] == counts["counter_clockwise"] == spec.n_curves // 2
    relative = abs(noise_std - spec.noise) / spec.noise
    return OracleOutcome(
        measured=noise_std,
        expected=spec.noise,
        tolerance="1%",
        passed=relative <= 0.01 and in_range and balanced,
        detail=f"directions {counts}",
    )


@oracle("synthdata.seed_determinism", criterion="determinism-round-trip")
def seed_determinism() -> OracleOutcome:
    spec = SpiralCorpusSpec(n_curves=20, curve_length=120, window=30, horizon=10)
    first, second = gen_spiral_corpus(spec, 7), gen_spiral_corpus(spec, 7)
    other = gen_spiral_corpus(spec, 7, split="test")
    same = np.array_equal(first.windows, second.windows) and np.array_equal(first.window_starts, second.window_starts)
    differs = not np.array_equal(first.windows, other.windows)
    return OracleOutcome(measured=float(same), expected=1.0, tolerance="bitwise", passed=same and differs)
