"""SVG figures drawn from already-loaded table columns; nothing here recomputes a model."""

from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams.update({"font.family": "DejaVu Sans", "axes.unicode_minus": False, "svg.hashsalt": "condflow"})

import matplotlib.pyplot as plt  # noqa: E402

from src.infrastructure.storage.exceptions import ArtifactWriteException  # noqa: E402


def _save(fig, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as err:
        raise ArtifactWriteException(path=str(path), detail=str(err))
    finally:
        plt.close(fig)
    return path


def render_curves(
    path: Path,
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    xlabel: str,
    ylabel: str,
    title: str,
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for label, values in series.items():
        ax.plot(x, values, marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def render_tolerance_histogram(path: Path, log10_tolerances: Mapping[int, Sequence[float]], bins: int = 30) -> Path:
    """One histogram per layer, overlaid."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for layer, values in sorted(log10_tolerances.items()):
        ax.hist(values, bins=bins, alpha=0.5, label=f"layer {layer}")
    ax.set_xlabel("log10 tolerance")
    ax.set_ylabel("count")
    ax.set_title("Learned tolerances")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def render_density_1d(path: Path, x: np.ndarray, exact: np.ndarray, model: np.ndarray) -> Path:
    """Columns are log-densities; the plot shows densities."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.plot(x, np.exp(exact), label="exact", linewidth=2)
    ax.plot(x, np.exp(model), label="model", linestyle="--")
    ax.set_xlabel("x")
    ax.set_ylabel("p(x)")
    ax.set_title("1D density")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def render_spiral_trajectories(
    path: Path,
    predictions: Mapping[int, np.ndarray],
    truth: Mapping[int, np.ndarray],
) -> Path:
    """Arrays are (steps, 2) per curve; each curve gets its own color."""
    fig, ax = plt.subplots(figsize=(6, 6), constrained_layout=True)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for index, curve in enumerate(sorted(predictions)):
        color = colors[index % len(colors)]
        ax.plot(truth[curve][:, 0], truth[curve][:, 1], color=color, alpha=0.4, linewidth=2)
        ax.plot(predictions[curve][:, 0], predictions[curve][:, 1], color=color, linestyle="--", label=f"curve {curve}")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("Extrapolated spirals (solid: truth, dashed: model)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)
