"""Tests for true networks, covariance construction and data generation."""
import numpy as np
import pytest

from src.core.generation import (
    discretize, make_ordinal_scheme, make_rng, pcor_to_covariance, sample_mvn,
    sample_pcor_network, synthetic_true_network, threshold_network, truth_from_data,
)
from src.core.glasso import precision_to_pcor
from src.models.errors import DimensionMismatch, GenerationFailed, InputError, NotPD
from src.models.network import OrdinalScheme


class TestSyntheticTruth:
    """Random sparse truth networks."""

    def test_benchmark_density_gives_125_edges(self, benchmark_truth):
        assert benchmark_truth.p == 25
        assert benchmark_truth.network.edge_count == 125

    def test_weights_valid(self, benchmark_truth):
        w = benchmark_truth.weights
        nonzero = np.abs(w[w != 0])
        assert np.array_equal(w, w.T)
        assert np.all(np.diag(w) == 0)
        assert nonzero.min() >= 0.05
        assert np.linalg.eigvalsh(np.eye(25) - w).min() > 0

    def test_balanced_signs(self, benchmark_truth):
        upper = benchmark_truth.weights[np.triu_indices(25, k=1)]
        upper = upper[upper != 0]
        assert np.sum(upper > 0) == round(0.5 * 125)

    def test_well_conditioned(self, benchmark_truth):
        eigenvalues = np.linalg.eigvalsh(np.eye(25) - benchmark_truth.weights)
        assert eigenvalues.min() == pytest.approx(0.55, abs=1e-6)

    def test_density_matches_edge_share(self, benchmark_truth):
        assert benchmark_truth.network.density == pytest.approx(125 / 300)

    def test_magnitudes_vary(self, benchmark_truth):
        magnitudes = np.abs(benchmark_truth.weights[benchmark_truth.weights != 0])
        assert magnitudes.max() > 1.3 * magnitudes.min()

    def test_custom_positive_fraction(self):
        truth = synthetic_true_network(p=10, density=0.4, seed=2, positive_fraction=1.0)
        assert np.all(truth.weights >= 0)

    def test_too_dense_for_cutoff(self):
        with pytest.raises(GenerationFailed):
            synthetic_true_network(p=25, density=0.95, seed=1, cutoff=0.1)

    def test_deterministic_by_seed(self):
        a = synthetic_true_network(p=10, density=0.3, seed=4)
        b = synthetic_true_network(p=10, density=0.3, seed=4)
        c = synthetic_true_network(p=10, density=0.3, seed=5)
        assert np.array_equal(a.weights, b.weights)
        assert not np.array_equal(a.weights, c.weights)

    def test_invalid_density(self):
        with pytest.raises(InputError):
            synthetic_true_network(p=5, density=1.2)


class TestThresholdNetwork:
    """Cutoff and PD repair."""

    def test_small_weights_removed(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 0.3
        w[1, 2] = w[2, 1] = 0.02
        truth = threshold_network(w, cutoff=0.05)
        assert truth.weights[1, 2] == 0.0
        assert truth.weights[0, 1] == 0.3
        assert not truth.repaired

    def test_non_pd_network_is_shrunk(self):
        w = np.full((3, 3), 0.6)
        np.fill_diagonal(w, 0.0)
        truth = threshold_network(w, cutoff=0.05)
        assert truth.repaired
        assert np.linalg.eigvalsh(np.eye(3) - truth.weights).min() > 0
        assert truth.network.edge_count == 3

    def test_asymmetric_rejected(self):
        w = np.zeros((3, 3))
        w[0, 1] = 0.2
        with pytest.raises(InputError):
            threshold_network(w)


class TestCovariance:
    """Partial correlations to sampling covariance and back."""

    def test_round_trip(self):
        for seed in range(100):
            truth = synthetic_true_network(p=10, density=0.3, seed=seed)
            sigma = pcor_to_covariance(truth)
            assert np.all(np.diag(sigma) == 1.0)
            recovered = precision_to_pcor(np.linalg.inv(sigma))
            assert recovered.weights == pytest.approx(truth.weights, abs=1e-8)

    def test_non_pd_precision(self):
        w = np.full((3, 3), 0.7)
        np.fill_diagonal(w, 0.0)
        with pytest.raises(NotPD):
            pcor_to_covariance(w)


class TestSampling:
    """Normal and ordinal data."""

    def test_mvn_reproducible(self, small_truth):
        sigma = pcor_to_covariance(small_truth)
        a = sample_mvn(sigma, 50, seed=9)
        b = sample_mvn(sigma, 50, seed=9)
        assert np.array_equal(a.values, b.values)
        assert a.kind == "continuous"

    def test_mvn_covariance(self, small_truth):
        sigma = pcor_to_covariance(small_truth)
        data = sample_mvn(sigma, 20_000, seed=1)
        assert np.cov(data.values, rowvar=False) == pytest.approx(sigma, abs=0.05)

    def test_rng_is_philox(self):
        assert isinstance(make_rng(3).bit_generator, np.random.Philox)

    def test_scheme_shape_and_order(self):
        scheme = make_ordinal_scheme(6, seed=2)
        assert scheme.thresholds.shape == (6, 4)
        assert np.all(np.diff(scheme.thresholds, axis=1) >= 0)
        assert make_ordinal_scheme(6, seed=2, levels=3).thresholds.shape == (6, 2)

    def test_discretize_rule(self):
        scheme = OrdinalScheme(np.array([[-1.0, 0.0, 1.0, 2.0]]), levels=5)
        x = np.array([[-3.0], [-1.0], [-0.5], [0.0], [0.5], [1.5], [9.0]])
        levels = discretize(x, scheme).values[:, 0]
        assert list(levels) == [1, 1, 2, 2, 3, 4, 5]

    def test_ordinal_levels_in_range(self, normal_data):
        data = discretize(normal_data, make_ordinal_scheme(normal_data.p, seed=4))
        assert data.kind == "ordinal"
        assert data.values.min() >= 1 and data.values.max() <= 5
        assert np.all(data.values == np.round(data.values))

    def test_unsorted_thresholds_rejected(self):
        scheme = OrdinalScheme(np.array([[0.5, -0.5]]), levels=3)
        with pytest.raises(ValueError):
            discretize(np.zeros((4, 1)), scheme)

    def test_discretize_dimension_check(self, normal_data):
        with pytest.raises(DimensionMismatch):
            discretize(normal_data, make_ordinal_scheme(normal_data.p + 1, seed=4))


class TestTruthFromData:
    """Sample partial-correlation networks of observed data."""

    def test_sample_network_close_to_truth(self, small_truth):
        data = sample_mvn(pcor_to_covariance(small_truth), 20_000, seed=2)
        sample = sample_pcor_network(data)
        assert sample.weights == pytest.approx(small_truth.weights, abs=0.05)

    def test_thresholded_truth_is_valid(self, normal_data):
        truth = truth_from_data(normal_data, cutoff=0.1)
        w = truth.weights
        assert np.all((w == 0) | (np.abs(w) >= 0.1))
        assert np.linalg.eigvalsh(np.eye(w.shape[0]) - w).min() > 0

    def test_needs_more_rows_than_columns(self, rng):
        with pytest.raises(InputError):
            sample_pcor_network(rng.normal(size=(4, 6)))
