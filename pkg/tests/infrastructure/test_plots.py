import numpy as np

from src.infrastructure.plots.renderer import (
    render_curves,
    render_density_1d,
    render_spiral_trajectories,
    render_tolerance_histogram,
)


def test_curves(tmp_path):
    path = render_curves(tmp_path / "c.svg", [1, 2, 3], {"a": [3.0, 2.0, 1.5]}, "epoch", "nll", "NLL")
    assert path.read_text().lstrip().startswith("<?xml")


def test_histogram_per_layer(tmp_path):
    path = render_tolerance_histogram(tmp_path / "h.svg", {0: [-5.0, -4.5, -5.2], 1: [-3.0, -3.1]})
    assert path.stat().st_size > 0


def test_density(tmp_path):
    x = np.linspace(-3.0, 3.0, 50)
    log_p = -0.5 * x**2 - 0.5 * np.log(2.0 * np.pi)
    assert render_density_1d(tmp_path / "d.svg", x, log_p, log_p + 0.01).exists()


def test_trajectories_are_reproducible(tmp_path):
    curve = np.column_stack([np.cos(np.linspace(0, 3, 20)), np.sin(np.linspace(0, 3, 20))])
    first = render_spiral_trajectories(tmp_path / "a.svg", {0: curve}, {0: curve * 1.1})
    second = render_spiral_trajectories(tmp_path / "b.svg", {0: curve}, {0: curve * 1.1})
    assert first.read_bytes() == second.read_bytes()
