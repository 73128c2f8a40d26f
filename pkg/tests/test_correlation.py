"""Tests for Pearson, polychoric and nearest-PD correlation routines."""
import numpy as np
import pytest
from scipy.stats import multivariate_normal

from src.core import correlation
from src.core.correlation import (
    bivariate_normal_cdf, estimate_thresholds, nearest_pd, pearson_matrix,
    polychoric_matrix, polychoric_pair,
)
from src.core.generation import discretize, make_ordinal_scheme
from src.models.errors import (
    DegenerateTable, DimensionMismatch, InputError, RhoOutOfRange, TooFewRows,
    ZeroVariance,
)


def _latent_ordinal(rho: float, n: int, seed: int, levels: int = 5):
    rng = np.random.default_rng(seed)
    z = rng.multivariate_normal([0.0, 0.0], [[1.0, rho], [rho, 1.0]], size=n)
    scheme = make_ordinal_scheme(2, seed=seed + 1, levels=levels)
    return discretize(z, scheme).values


class TestPearson:
    """Product-moment correlations."""

    def test_matches_numpy(self, rng):
        x = rng.normal(size=(80, 5))
        r = pearson_matrix(x)
        assert r.values == pytest.approx(np.corrcoef(x, rowvar=False), abs=1e-12)
        assert np.all(np.diag(r.values) == 1.0)
        assert np.array_equal(r.values, r.values.T)
        assert r.source == "pearson"

    def test_constant_column_names_index(self, rng):
        x = rng.normal(size=(30, 4))
        x[:, 2] = 7.0
        with pytest.raises(ZeroVariance) as excinfo:
            pearson_matrix(x)
        assert excinfo.value.column == 2

    def test_single_row_rejected(self):
        with pytest.raises(TooFewRows):
            pearson_matrix(np.ones((1, 3)))


class TestThresholds:
    """Marginal threshold estimation."""

    def test_balanced_binary_has_zero_cut(self):
        t = estimate_thresholds(np.array([1, 2] * 50), levels=2)
        assert t.values == pytest.approx([0.0], abs=1e-12)

    def test_empty_top_category_is_finite(self):
        t = estimate_thresholds(np.array([1, 1, 2, 2, 3, 3]), levels=4)
        assert np.all(np.isfinite(t.values))
        assert np.all(np.diff(t.values) >= 0)

    def test_out_of_range_values(self):
        with pytest.raises(InputError):
            estimate_thresholds(np.array([0, 1, 2]), levels=3)


class TestBivariateNormal:
    """Bivariate normal CDF accuracy and edge cases."""

    @pytest.mark.parametrize("rho", [-0.95, -0.5, 0.0, 0.3, 0.8, 0.95])
    def test_orthant_probability(self, rho):
        expected = 0.25 + np.arcsin(rho) / (2 * np.pi)
        assert bivariate_normal_cdf(0.0, 0.0, rho) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("rho", [-0.97, -0.6, 0.2, 0.7, 0.99])
    def test_matches_scipy(self, rho):
        h = np.array([-1.3, -0.2, 0.4, 1.7])
        k = np.array([0.5, -1.1, 0.9, 2.2])
        ours = bivariate_normal_cdf(h, k, rho)
        cov = [[1.0, rho], [rho, 1.0]]
        expected = np.array([
            multivariate_normal.cdf([a, b], mean=[0.0, 0.0], cov=cov, abseps=1e-10, releps=1e-10)
            for a, b in zip(h, k)
        ])
        assert ours == pytest.approx(expected, abs=1e-6)

    def test_infinite_limits(self):
        assert bivariate_normal_cdf(np.inf, np.inf, 0.4) == 1.0
        assert bivariate_normal_cdf(-np.inf, 0.3, 0.4) == 0.0
        assert bivariate_normal_cdf(np.inf, 0.0, 0.4) == pytest.approx(0.5)

    def test_symmetric_in_arguments(self):
        assert bivariate_normal_cdf(0.3, -0.8, 0.6) == pytest.approx(
            bivariate_normal_cdf(-0.8, 0.3, 0.6), abs=1e-14)

    def test_rho_out_of_range(self):
        with pytest.raises(RhoOutOfRange):
            bivariate_normal_cdf(0.0, 0.0, 1.0)


class TestPolychoric:
    """Two-step polychoric estimation."""

    def test_recovers_latent_correlation(self):
        x = _latent_ordinal(0.5, 10_000, seed=5)
        assert polychoric_pair(x[:, 0], x[:, 1]) == pytest.approx(0.5, abs=0.03)

    def test_exactly_symmetric(self):
        x = _latent_ordinal(-0.3, 400, seed=8)
        assert polychoric_pair(x[:, 0], x[:, 1]) == polychoric_pair(x[:, 1], x[:, 0])

    def test_independent_columns_near_zero(self):
        x = _latent_ordinal(0.0, 10_000, seed=13)
        assert abs(polychoric_pair(x[:, 0], x[:, 1])) < 0.05

    def test_constant_column(self):
        with pytest.raises(DegenerateTable):
            polychoric_pair(np.ones(20), np.arange(20) % 3 + 1)

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            polychoric_pair(np.array([1, 2, 3]), np.array([1, 2]))

    def test_matrix_reports_constant_column(self, rng):
        x = rng.integers(1, 4, size=(50, 3))
        x[:, 1] = 2
        with pytest.raises(DegenerateTable) as excinfo:
            polychoric_matrix(x)
        assert excinfo.value.columns == (1,)

    def test_matrix_is_unit_diagonal_and_psd(self, rng):
        z = rng.multivariate_normal(np.zeros(4), 0.4 * np.ones((4, 4)) + 0.6 * np.eye(4), size=300)
        x = discretize(z, make_ordinal_scheme(4, seed=2))
        r = polychoric_matrix(x)
        assert np.all(np.diag(r.values) == 1.0)
        assert np.array_equal(r.values, r.values.T)
        assert np.linalg.eigvalsh(r.values).min() >= 0
        assert r.source == "polychoric"

    def test_indefinite_pairwise_matrix_is_repaired(self):
        r = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]])
        repaired = correlation._repair_pairwise(r, "polychoric")
        assert repaired.repaired
        assert np.linalg.eigvalsh(repaired.values).min() > 0


class TestNearestPD:
    """Eigenvalue-clipping repair."""

    def test_pd_input_unchanged(self, rng):
        r = pearson_matrix(rng.normal(size=(100, 4))).values
        out = nearest_pd(r)
        assert np.array_equal(out.values, r)
        assert not out.repaired

    def test_indefinite_input(self):
        r = np.array([[1.0, 0.95, 0.1], [0.95, 1.0, 0.9], [0.1, 0.9, 1.0]])
        assert np.linalg.eigvalsh(r).min() < 0
        out = nearest_pd(r, floor=1e-4)
        assert np.linalg.eigvalsh(out.values).min() >= 0.99e-4
        assert np.all(np.diag(out.values) == 1.0)
        assert out.repaired
        assert np.max(np.abs(out.values - r)) < 0.3

    def test_psd_singular_matrix_is_repaired(self):
        r = np.array([[1.0, 0.6, 0.8], [0.6, 1.0, 0.96], [0.8, 0.96, 1.0]])
        repaired = correlation._repair_pairwise(r, "polychoric")
        assert repaired.repaired
        assert np.linalg.eigvalsh(repaired.values).min() >= 1e-8
        np.linalg.cholesky(repaired.values)


class TestPolychoricLimits:
    """Boundary behaviour and agreement with the latent correlations."""

    def test_concordant_table_hits_bound(self):
        x = np.repeat([1, 2, 3], 50)
        assert polychoric_pair(x, x) == pytest.approx(0.9999, abs=1e-9)
        assert polychoric_pair(x, 4 - x) == pytest.approx(-0.9999, abs=1e-9)

    def test_many_levels_match_pearson(self):
        rng = np.random.default_rng(21)
        z = rng.multivariate_normal([0.0, 0.0], [[1.0, 0.6], [0.6, 1.0]], size=5000)
        x = discretize(z, make_ordinal_scheme(2, seed=22, levels=25)).values
        latent = np.corrcoef(z, rowvar=False)[0, 1]
        assert polychoric_pair(x[:, 0], x[:, 1]) == pytest.approx(latent, abs=0.05)

    def test_five_variable_matrix_recovery(self):
        index = np.arange(5)
        sigma = 0.5 ** np.abs(index[:, None] - index[None, :])
        rng = np.random.default_rng(31)
        z = rng.multivariate_normal(np.zeros(5), sigma, size=5000)
        x = discretize(z, make_ordinal_scheme(5, seed=4))
        r = polychoric_matrix(x)
        assert r.values == pytest.approx(sigma, abs=0.05)
        assert not r.repaired
