"""Shared fixtures for the GeLasso test suite."""
import numpy as np
import pytest

from src.core.generation import pcor_to_covariance, sample_mvn, synthetic_true_network
from src.services.storage import StorageManager


def make_correlation(rng: np.random.Generator, p: int, n: int = 200, strength: float = 1.0) -> np.ndarray:
    """Pearson correlation of n draws from a random dense covariance."""
    a = rng.normal(scale=strength, size=(p, p))
    cov = a @ a.T + 0.5 * np.eye(p)
    x = rng.multivariate_normal(np.zeros(p), cov, size=n)
    return np.corrcoef(x, rowvar=False)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(seed=2026)


@pytest.fixture
def small_truth():
    """Six-node sparse truth network with every edge at least 0.15."""
    return synthetic_true_network(p=6, density=0.4, seed=3, cutoff=0.15)


@pytest.fixture
def benchmark_truth():
    """25-node truth with 125 of 300 edges."""
    return synthetic_true_network(p=25, density=125 / 300, seed=1)


@pytest.fixture
def normal_data(small_truth):
    return sample_mvn(pcor_to_covariance(small_truth), 1000, seed=11)


@pytest.fixture
def storage(tmp_path) -> StorageManager:
    return StorageManager(input_dir=tmp_path / "input", output_dir=tmp_path / "output")
