"""Data-generating process: sparse true networks, sampling covariances, normal and ordinal data.

All randomness comes from numpy's counter-based Philox generator seeded with
a plain integer, so every draw is reproducible from its seed alone.
"""
import logging
from typing import List, Optional

import numpy as np
from scipy import linalg

from config.constants import (
    DEFAULT_CUTOFF, DEFAULT_DENSITY, DEFAULT_P, DEFAULT_POSITIVE_FRACTION,
    MAX_GENERATION_RETRIES, MAX_REPAIR_ROUNDS, NETWORK_EIGEN_FLOOR,
    NETWORK_BISECTION_STEPS, NETWORK_SPECTRAL_TARGET, ORDINAL_LEVELS,
)
from src.core.glasso import precision_to_pcor
from src.models.errors import (
    DimensionMismatch, GenerationFailed, InputError, NotPD, NotRepairable,
)
from src.models.network import (
    DataLike, Dataset, OrdinalScheme, PcorNetwork, TrueNetwork, as_matrix,
)

logger = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator for the given integer seed"""
    return np.random.Generator(np.random.Philox(int(seed)))


def _weights(pcor) -> np.ndarray:
    if isinstance(pcor, (TrueNetwork, PcorNetwork)):
        return pcor.weights
    return np.asarray(pcor, dtype=float)


def threshold_network(pcor, cutoff: float = DEFAULT_CUTOFF,
                      provenance: str = "") -> TrueNetwork:
    """
    Remove edges with |w| < cutoff and make sure the implied precision stays PD

    When I - W is not positive definite, all weights are shrunk by the
    smallest factor that lifts its smallest eigenvalue above the floor, and
    thresholding is applied again.

    Raises:
        NotRepairable: If no PD network is reached within MAX_REPAIR_ROUNDS
    """
    w = _weights(pcor).copy()
    if isinstance(pcor, TrueNetwork):
        pcor = pcor.network
    names = pcor.names if isinstance(pcor, PcorNetwork) else []
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InputError("Network weights must be a square matrix")
    if not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
        raise InputError("Network weights must be symmetric")
    if np.any(np.diag(w) != 0):
        raise InputError("Network weights must have a zero diagonal")
    w = (w + w.T) / 2.0

    p = w.shape[0]
    repaired = False
    w[np.abs(w) < cutoff] = 0.0
    for _ in range(MAX_REPAIR_ROUNDS):
        min_eig = float(np.linalg.eigvalsh(np.eye(p) - w).min()) if p else 1.0
        if min_eig >= NETWORK_EIGEN_FLOOR:
            return TrueNetwork(PcorNetwork(w, names=list(names)), provenance, repaired)
        mu_max = float(np.linalg.eigvalsh(w).max())
        factor = (1.0 - 2.0 * NETWORK_EIGEN_FLOOR) / mu_max
        logger.warning(f"Implied precision not PD (min eigenvalue {min_eig:.3e}); "
                       f"shrinking edge weights by {factor:.4f}")
        w = w * factor
        w[np.abs(w) < cutoff] = 0.0
        repaired = True
    raise NotRepairable(f"Network still not PD after {MAX_REPAIR_ROUNDS} repair rounds")


def sample_pcor_network(data: DataLike, names: Optional[List[str]] = None) -> PcorNetwork:
    """Unregularized sample partial correlations: the standardized negative inverse covariance"""
    x = as_matrix(data)
    n, p = x.shape
    if n <= p:
        raise InputError(f"Need more rows than columns for a sample precision matrix ({n} <= {p})")
    cov = np.cov(x, rowvar=False)
    try:
        chol = linalg.cho_factor(cov, lower=True)
    except linalg.LinAlgError:
        raise NotPD(float(np.linalg.eigvalsh(cov).min()), "sample covariance")
    K = linalg.cho_solve(chol, np.eye(p))
    if names is None and isinstance(data, Dataset):
        names = data.names
    return precision_to_pcor((K + K.T) / 2.0, names)


def truth_from_data(data: DataLike, cutoff: float = DEFAULT_CUTOFF,
                    provenance: str = "data") -> TrueNetwork:
    """Sample partial-correlation network of a dataset, thresholded at cutoff"""
    return threshold_network(sample_pcor_network(data), cutoff, provenance)


def pcor_to_covariance(net) -> np.ndarray:
    """
    Unit-diagonal covariance whose partial correlations are the network weights

    Builds K with k_ii = 1 and k_ij = -w_ij, inverts it and rescales to a
    correlation matrix.

    Raises:
        NotPD: If the implied precision matrix is not positive definite
    """
    w = _weights(net)
    p = w.shape[0]
    K = np.eye(p) - w
    np.fill_diagonal(K, 1.0)
    try:
        chol = linalg.cho_factor(K, lower=True)
    except linalg.LinAlgError:
        raise NotPD(float(np.linalg.eigvalsh(K).min()), "implied precision matrix")
    sigma = linalg.cho_solve(chol, np.eye(p))
    scale = np.sqrt(np.diag(sigma))
    sigma = sigma / np.outer(scale, scale)
    sigma = (sigma + sigma.T) / 2.0
    np.fill_diagonal(sigma, 1.0)
    return sigma


def sample_mvn(sigma: np.ndarray, n: int, seed: int,
               names: Optional[List[str]] = None) -> Dataset:
    """
    Draw n zero-mean multivariate normal rows with covariance sigma

    Args:
        sigma: Positive-definite covariance
        n: Number of rows
        seed: Generator seed

    Returns:
        Continuous Dataset
    """
    if n < 1:
        raise InputError(f"Sample size must be at least 1, got {n}")
    sigma = np.asarray(sigma, dtype=float)
    try:
        chol = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        raise NotPD(float(np.linalg.eigvalsh(sigma).min()), "sampling covariance")
    z = make_rng(seed).standard_normal((n, sigma.shape[0]))
    return Dataset(z @ chol.T, names=list(names or []), kind="continuous")


def make_ordinal_scheme(p: int, seed: int, levels: int = ORDINAL_LEVELS) -> OrdinalScheme:
    """Draw levels - 1 standard normal thresholds per variable, sorted ascending"""
    if p < 1:
        raise InputError(f"Need at least one variable, got {p}")
    if levels < 2:
        raise InputError(f"Need at least two levels, got {levels}")
    thresholds = np.sort(make_rng(seed).standard_normal((p, levels - 1)), axis=1)
    return OrdinalScheme(thresholds, levels)


def discretize(data: DataLike, scheme: OrdinalScheme) -> Dataset:
    """
    Cut continuous data into ordinal levels

    A value maps to 1 + the number of thresholds strictly below it.
    """
    x = as_matrix(data)
    if x.shape[1] != scheme.p:
        raise DimensionMismatch((x.shape[1],), (scheme.p,))
    levels = np.empty(x.shape, dtype=int)
    for j in range(x.shape[1]):
        levels[:, j] = 1 + np.searchsorted(scheme.threshold_set(j).values, x[:, j], side='left')
    names = data.names if isinstance(data, Dataset) else []
    return Dataset(levels, names=list(names), kind="ordinal")


def _largest_eigenvalue(w: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(w)[-1])


def _spread_to_target(floor: np.ndarray, excess: np.ndarray, target: float) -> np.ndarray:
    """
    Weights floor + t * excess with the largest t keeping lambda_max(W) <= target

    lambda_max is convex in t, so the feasible t form an interval starting at 0
    and bisection finds its right end.
    """
    low, high = 0.0, 1.0
    while _largest_eigenvalue(floor + high * excess) <= target:
        low, high = high, 2.0 * high
    for _ in range(NETWORK_BISECTION_STEPS):
        mid = (low + high) / 2.0
        if _largest_eigenvalue(floor + mid * excess) <= target:
            low = mid
        else:
            high = mid
    return floor + low * excess


def synthetic_true_network(p: int = DEFAULT_P, density: float = DEFAULT_DENSITY,
                           seed: int = 1, cutoff: float = DEFAULT_CUTOFF,
                           positive_fraction: float = DEFAULT_POSITIVE_FRACTION) -> TrueNetwork:
    """
    Random sparse partial-correlation network usable as simulation truth

    Exactly round(density * p(p-1)/2) edges are placed uniformly at random and
    exactly round(positive_fraction * edges) of them are positive. Every
    magnitude is cutoff plus a right-skewed excess, and the excess is scaled
    so the largest eigenvalue of W equals NETWORK_SPECTRAL_TARGET. The
    smallest eigenvalue of I - W is then 1 - NETWORK_SPECTRAL_TARGET.

    Raises:
        GenerationFailed: If no draw fits the target within MAX_GENERATION_RETRIES
    """
    if p < 2:
        raise InputError(f"Need at least two variables, got {p}")
    if not 0 < density < 1:
        raise InputError(f"Density must lie in (0, 1), got {density}")
    if not 0 <= positive_fraction <= 1:
        raise InputError(f"Positive fraction must lie in [0, 1], got {positive_fraction}")

    provenance = f"synthetic p={p} density={density:.6g} seed={seed}"
    n_pairs = p * (p - 1) // 2
    n_edges = int(round(density * n_pairs))
    if n_edges == 0:
        return TrueNetwork(PcorNetwork.empty(p), provenance)

    rows, cols = np.triu_indices(p, k=1)
    n_positive = int(round(positive_fraction * n_edges))
    rng = make_rng(seed)
    for attempt in range(MAX_GENERATION_RETRIES):
        chosen = rng.choice(n_pairs, size=n_edges, replace=False)
        signs = rng.permutation(np.where(np.arange(n_edges) < n_positive, 1.0, -1.0))
        excess = rng.random(n_edges) ** 2
        floor = np.zeros((p, p))
        spread = np.zeros((p, p))
        floor[rows[chosen], cols[chosen]] = signs * cutoff
        spread[rows[chosen], cols[chosen]] = signs * excess
        floor, spread = floor + floor.T, spread + spread.T
        if _largest_eigenvalue(floor) >= NETWORK_SPECTRAL_TARGET:
            continue
        w = _spread_to_target(floor, spread, NETWORK_SPECTRAL_TARGET)
        logger.debug(f"Synthetic network accepted after {attempt + 1} draw(s); "
                     f"weights in [{np.abs(w[w != 0]).min():.3f}, {np.abs(w).max():.3f}]")
        return TrueNetwork(PcorNetwork(w), provenance)
    raise GenerationFailed(f"No valid network after {MAX_GENERATION_RETRIES} draws "
                           f"(p={p}, density={density:.4g}, cutoff={cutoff})")
