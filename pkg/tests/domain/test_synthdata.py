import math

import numpy as np
import pytest

from scipy import stats

from src.domain.synthdata.exceptions import InvalidSpecException, OddCurveCountException
from src.domain.synthdata.seeds import SeedStream, philox_generator, polar_normal
from src.domain.synthdata.service import gen_1d_mixture, gen_2d_labeled, gen_spiral_corpora, gen_spiral_corpus
from src.domain.synthdata.values import Labeled2dSpec, MixtureSpec, SpiralCorpusSpec

SMALL = SpiralCorpusSpec(n_curves=6, curve_length=80, window=10, horizon=5)


class TestSeeds:
    def test_named_streams_are_independent_of_order(self):
        first = SeedStream(7)
        first.generator("a").random(100)
        late = first.generator("b").random(3)
        np.testing.assert_array_equal(late, SeedStream(7).generator("b").random(3))

    def test_names_and_seeds_separate_streams(self):
        base = philox_generator(1, "x").random(4)
        assert not np.array_equal(base, philox_generator(1, "y").random(4))
        assert not np.array_equal(base, philox_generator(2, "x").random(4))

    def test_fresh_restarts_a_stream(self):
        stream = SeedStream(3)
        drawn = stream.generator("n").random(2)
        np.testing.assert_array_equal(stream.fresh("n").random(2), drawn)

    def test_polar_normal_is_standard_normal(self):
        draws = polar_normal(philox_generator(11, "polar"), 20_000)
        assert stats.kstest(draws, "norm").pvalue > 0.001
        assert polar_normal(philox_generator(11, "polar"), (3, 4)).shape == (3, 4)


class TestMixture:
    def test_single_component_density(self):
        spec = MixtureSpec(weights=(1.0,), means=(0.0,), stds=(1.0,))
        assert math.exp(spec.log_density(0.0)) == pytest.approx(0.3989422804, abs=1e-10)

    def test_density_integrates_to_one(self):
        grid = -10.0 + 1e-3 * np.arange(20_001)
        area = np.sum(np.exp(MixtureSpec().log_density(grid))) * 1e-3
        assert area == pytest.approx(1.0, abs=1e-6)

    def test_samples_match_moments(self):
        spec = MixtureSpec()
        x, log_density = gen_1d_mixture(spec, 20_000, seed=0)
        mean = sum(w * m for w, m in zip(spec.weights, spec.means))
        second = sum(w * (s * s + m * m) for w, m, s in zip(spec.weights, spec.means, spec.stds))
        assert x.shape == (20_000, 1)
        assert x.mean() == pytest.approx(mean, abs=0.05)
        assert x.var() == pytest.approx(second - mean * mean, rel=0.05)
        assert log_density is spec.log_density

    def test_same_seed_same_samples(self):
        a, _ = gen_1d_mixture(MixtureSpec(), 50, seed=4)
        b, _ = gen_1d_mixture(MixtureSpec(), 50, seed=4)
        c, _ = gen_1d_mixture(MixtureSpec(), 50, seed=4, split="test")
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"weights": (0.5, 0.4), "means": (0.0, 1.0), "stds": (1.0, 1.0)},
            {"weights": (1.0,), "means": (0.0,), "stds": (0.0,)},
            {"weights": (1.0,), "means": (0.0, 1.0), "stds": (1.0,)},
        ],
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(InvalidSpecException):
            MixtureSpec(**kwargs)

    def test_sample_count(self):
        with pytest.raises(InvalidSpecException):
            gen_1d_mixture(MixtureSpec(), 0, seed=0)


class TestLabeled:
    def test_balanced_classes(self):
        spec = Labeled2dSpec(samples_per_class=25)
        points, labels, _ = gen_2d_labeled(spec, seed=1)
        assert points.shape == (100, 2)
        np.testing.assert_array_equal(np.bincount(labels), [25, 25, 25, 25])

    def test_class_density_normalizes(self):
        spec = Labeled2dSpec()
        step = 0.05
        axis = np.arange(-8.0, 8.0, step)
        grid = np.stack(np.meshgrid(axis, axis), axis=-1).reshape(-1, 2)
        for label in range(spec.num_classes):
            area = np.sum(np.exp(spec.class_log_density(grid, label))) * step * step
            assert area == pytest.approx(1.0, abs=1e-4)

    def test_marginal_averages_classes(self):
        spec = Labeled2dSpec()
        x = np.array([[0.3, -0.7]])
        per_class = [math.exp(spec.class_log_density(x, label)[0]) for label in range(4)]
        assert math.exp(spec.log_density(x)[0]) == pytest.approx(sum(per_class) / 4)

    def test_needs_two_classes(self):
        with pytest.raises(InvalidSpecException):
            Labeled2dSpec(means=((0.0, 0.0),), stds=((1.0, 1.0),))


class TestSpirals:
    def test_shapes_and_balance(self):
        corpus = gen_spiral_corpus(SMALL, seed=2)
        assert len(corpus) == 6
        assert corpus.curves.shape == (6, 80, 2)
        assert corpus.windows.shape == (6, 10, 2)
        assert corpus.direction_counts == {"clockwise": 3, "counter_clockwise": 3}

    def test_windows_leave_room_for_the_horizon(self):
        corpus = gen_spiral_corpus(SMALL, seed=2)
        assert np.all(corpus.window_starts + SMALL.window + SMALL.horizon <= SMALL.curve_length)

    def test_noiseless_windows_follow_the_curve(self):
        spec = SpiralCorpusSpec(n_curves=2, curve_length=40, window=8, horizon=2, noise=0.0)
        corpus = gen_spiral_corpus(spec, seed=3)
        for i in range(2):
            start = corpus.window_starts[i]
            np.testing.assert_array_equal(corpus.windows[i], corpus.curves[i, start : start + 8])

    def test_future_follows_the_window(self):
        corpus = gen_spiral_corpus(SMALL, seed=2)
        offsets, truth = corpus.future()
        spacing = corpus.times[1] - corpus.times[0]
        np.testing.assert_allclose(offsets, spacing * np.arange(10, 15))
        start = corpus.window_starts[0]
        np.testing.assert_array_equal(truth[0], corpus.curves[0, start + 10 : start + 15])

    def test_batch_times_are_relative(self):
        batch = gen_spiral_corpus(SMALL, seed=2).batch([0, 1])
        assert batch.times[0] == 0.0
        assert batch.size == 2

    def test_odd_count(self):
        with pytest.raises(OddCurveCountException):
            gen_spiral_corpus(SpiralCorpusSpec(n_curves=3, curve_length=40, window=8, horizon=2), seed=0)

    def test_splits_do_not_share_draws(self):
        train, test = gen_spiral_corpora(SMALL, test_curves=4, seed=5)
        assert len(test) == 4
        assert not np.array_equal(train.windows[:4], test.windows)

    def test_window_must_fit(self):
        with pytest.raises(InvalidSpecException):
            SpiralCorpusSpec(n_curves=2, curve_length=10, window=8, horizon=5)

    @pytest.mark.slow
    def test_parameter_statistics(self):
        corpus = gen_spiral_corpus(SpiralCorpusSpec(), seed=51)
        a = np.array([system.a for system in corpus.systems])
        b = np.array([system.b for system in corpus.systems])
        assert a.mean() == pytest.approx(1.0, abs=0.01)
        assert a.std() == pytest.approx(0.08, abs=0.005)
        assert b.mean() == pytest.approx(0.25, abs=0.005)
        assert b.std() == pytest.approx(0.03, abs=0.002)
