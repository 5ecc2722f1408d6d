import numpy as np
import pytest

from ne_moea import (
    ConfigError,
    NormalizationSpec,
    RandomSource,
    UnsupportedDimensionError,
    hypervolume_2d,
    hypervolume_mc,
    normalize,
)
from ne_moea.indicators import hypervolume_contributions_2d


class TestHypervolume2D:
    def test_two_points(self):
        assert hypervolume_2d([(1, 0.5), (0.5, 1)], (0, 0)) == pytest.approx(0.75)

    def test_unit_square(self):
        assert hypervolume_2d([(1, 1)], (0, 0)) == 1.0

    def test_empty_and_below_reference(self):
        assert hypervolume_2d(np.empty((0, 2))) == 0.0
        assert hypervolume_2d([(-1, 2)], (0, 0)) == 0.0

    def test_dominated_points_add_nothing(self):
        front = [(3, 1), (2, 2), (1, 3)]
        assert hypervolume_2d(front + [(1, 1), (2, 2)]) == hypervolume_2d(front) == 6.0

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            hypervolume_2d([(1, 1, 1)], (0, 0, 0))

    def test_matches_monte_carlo(self):
        rng = RandomSource(21)
        for trial in range(200):
            points = rng.random((int(rng.integers(1, 51)), 2))
            estimate, error = hypervolume_mc(points, (0, 0), 1_000_000, rng.fork([trial]))
            exact = hypervolume_2d(points, (0, 0))
            assert abs(estimate - exact) <= 3 * error + 1e-12


class TestContributions:
    def test_tied_front(self):
        contributions = hypervolume_contributions_2d([(1, 3), (2, 2), (3, 1)], (0, 0))
        assert contributions.tolist() == [1.0, 1.0, 1.0]

    def test_untied_front(self):
        contributions = hypervolume_contributions_2d([(1, 3), (2, 2.5), (3, 1)], (0, 0))
        assert contributions.tolist() == pytest.approx([0.5, 1.5, 1.0])

    def test_equals_exclusive_volume(self):
        points = RandomSource(22).random((30, 2))
        points = points[np.argsort(points[:, 0])]
        # Keep only the staircase
        front = points[np.maximum.accumulate(points[::-1, 1])[::-1] == points[:, 1]]
        total = hypervolume_2d(front)
        contributions = hypervolume_contributions_2d(front)
        for i in range(front.shape[0]):
            assert contributions[i] == pytest.approx(total - hypervolume_2d(np.delete(front, i, 0)))


class TestMonteCarlo:
    def test_full_box(self, rng):
        estimate, error = hypervolume_mc([(1, 1)], (0, 0), 10_000, rng)
        assert estimate == 1.0 and error == 0.0

    def test_empty(self, rng):
        assert hypervolume_mc(np.empty((0, 2)), (0, 0), 1000, rng) == (0.0, 0.0)

    def test_two_points(self, rng):
        estimate, error = hypervolume_mc([(1, 0.5), (0.5, 1)], (0, 0), 1_000_000, rng)
        assert abs(estimate - 0.75) <= 3 * error

    def test_three_objectives(self, rng):
        points = [(1, 0.5, 1), (0.5, 1, 1)]
        estimate, error = hypervolume_mc(points, (0, 0, 0), 200_000, rng)
        assert abs(estimate - 0.75) <= 3 * error

    @pytest.mark.parametrize("samples", [0, -5])
    def test_needs_samples(self, rng, samples):
        with pytest.raises(ConfigError):
            hypervolume_mc([(1, 0.5)], (0, 0), samples, rng)


class TestNormalization:
    def test_identity(self):
        points = np.array([[3.0, 4.0], [1.0, 2.0]])
        assert np.array_equal(normalize(points, NormalizationSpec.identity(2)), points)

    def test_maxima(self):
        a = np.array([[10.0, 2.0], [5.0, 8.0]])
        b = np.array([[20.0, 1.0]])
        spec = NormalizationSpec.from_maxima([a, b, np.empty((0, 2))])
        assert spec.scales == (20.0, 8.0)
        scaled = normalize(np.concatenate([a, b]), spec)
        assert np.all((scaled >= 0) & (scaled <= 1))
        assert np.all(scaled.max(axis=0) == 1.0)

    @pytest.mark.parametrize("scales", [(0.0, 1.0), (1.0, -2.0), (float("nan"), 1.0)])
    def test_invalid_scales(self, scales):
        with pytest.raises(ConfigError):
            NormalizationSpec(scales)
