"""EBIC-based selection over a geometric glasso penalty path."""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config.constants import (
    DEFAULT_GAMMA, DEFAULT_N_LAMBDAS, DEFAULT_RATIO, EBIC_TIE_TOL,
)
from src.core.glasso import glasso_path, precision_to_pcor, prepare_input
from src.models.errors import AllZeroCorrelations, InputError, NotPD
from src.models.network import (
    CorrelationMatrix, EbicTrace, LambdaGrid, PcorNetwork, PrecisionMatrix,
    upper_triangle,
)

logger = logging.getLogger(__name__)


def _values(matrix) -> np.ndarray:
    if isinstance(matrix, (CorrelationMatrix, PrecisionMatrix)):
        return matrix.values
    return np.asarray(matrix, dtype=float)


def lambda_grid(S, ratio: float = DEFAULT_RATIO, m: int = DEFAULT_N_LAMBDAS) -> LambdaGrid:
    """
    Descending log-spaced penalties from the largest absolute correlation down to ratio times it

    Raises:
        AllZeroCorrelations: If every off-diagonal entry of S is zero
    """
    if not 0 < ratio < 1:
        raise InputError(f"Ratio must lie in (0, 1), got {ratio}")
    if m < 2:
        raise InputError(f"Need at least 2 lambda values, got {m}")
    corr = S if isinstance(S, CorrelationMatrix) else CorrelationMatrix(_values(S))
    lambda_max = corr.max_abs_offdiag()
    if lambda_max == 0:
        raise AllZeroCorrelations()
    values = lambda_max * ratio ** (np.arange(m) / (m - 1))
    return LambdaGrid(values, ratio, lambda_max)


def gaussian_loglik(K, S, n: int) -> float:
    """(n/2) (log det K - trace(S K))"""
    k = _values(K)
    s = _values(S)
    try:
        chol = linalg.cholesky(k, lower=True)
    except linalg.LinAlgError:
        raise NotPD(float(np.linalg.eigvalsh(k).min()), "precision matrix")
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return (n / 2.0) * (logdet - np.sum(s * k))


def edge_count(K) -> int:
    return int(np.count_nonzero(upper_triangle(_values(K))))


def ebic(K, S, n: int, gamma: float = DEFAULT_GAMMA) -> float:
    """
    Extended BIC: -2 loglik + E log n + 4 E gamma log p

    E is the number of nonzero upper-triangle entries of K. gamma = 0 gives the BIC.
    """
    if gamma < 0:
        raise InputError(f"gamma must be nonnegative, got {gamma}")
    k = _values(K)
    p = k.shape[0]
    E = edge_count(k)
    return -2.0 * gaussian_loglik(k, S, n) + E * np.log(n) + 4.0 * E * gamma * np.log(p)


def _check_sample_size(n: int) -> None:
    if n <= 1:
        raise InputError(f"Sample size must exceed 1, got {n}")


def score_path(path: Sequence[PrecisionMatrix], S, n: int,
               gamma: float = DEFAULT_GAMMA) -> EbicTrace:
    """
    Score a fitted path with EBIC and pick the minimizer

    S goes through the same symmetrization and loading as the glasso input,
    so re-scoring a path against the matrix it was fitted on is exact. Ties
    within EBIC_TIE_TOL go to the larger lambda (the sparser model).
    """
    _check_sample_size(n)
    S, _ = prepare_input(S)
    lambdas = np.array([fit.lam for fit in path])
    edges = np.array([fit.edge_count for fit in path])
    logliks = np.array([gaussian_loglik(fit, S, n) for fit in path])
    scores = np.array([ebic(fit, S, n, gamma) for fit in path])
    converged = np.array([fit.converged for fit in path])

    order = np.argsort(-lambdas, kind='stable')
    selected = int(order[0])
    for index in order[1:]:
        if scores[index] < scores[selected] - EBIC_TIE_TOL:
            selected = int(index)
    return EbicTrace(lambdas, edges, logliks, scores, converged, selected, gamma, n)


def _empty_selection(S, n: int, gamma: float,
                     names: Optional[List[str]]) -> Tuple[PcorNetwork, EbicTrace]:
    s, _ = prepare_input(S)
    K = np.diag(1.0 / np.diag(s))
    fit = PrecisionMatrix(K, 0.0, 0, True, covariance=np.diag(np.diag(s)))
    trace = score_path([fit], S, n, gamma)
    return precision_to_pcor(fit, names), trace


def select_path(S, n: int, gamma: float = DEFAULT_GAMMA, ratio: float = DEFAULT_RATIO,
                m: int = DEFAULT_N_LAMBDAS,
                names: Optional[List[str]] = None, strict: bool = False
                ) -> Tuple[PcorNetwork, EbicTrace, List[PrecisionMatrix]]:
    """Like select_network, but also returns the fitted path"""
    _check_sample_size(n)
    try:
        grid = lambda_grid(S, ratio, m)
    except AllZeroCorrelations:
        logger.info("All correlations are zero; returning the empty network")
        network, trace = _empty_selection(S, n, gamma, names)
        return network, trace, []

    path = glasso_path(S, grid.values, strict=strict)
    trace = score_path(path, S, n, gamma)
    chosen = path[trace.selected]
    logger.debug(f"Selected lambda {chosen.lam:.4g} with {chosen.edge_count} edges "
                 f"(index {trace.selected} of {len(path)})")
    return precision_to_pcor(chosen, names), trace, path


def select_network(S, n: int, gamma: float = DEFAULT_GAMMA, ratio: float = DEFAULT_RATIO,
                   m: int = DEFAULT_N_LAMBDAS,
                   names: Optional[List[str]] = None,
                   strict: bool = False) -> Tuple[PcorNetwork, EbicTrace]:
    """
    EBICglasso: fit the glasso path over lambda_grid and return the EBIC-optimal network

    Args:
        S: Correlation matrix
        n: Sample size the correlations were computed from
        gamma: EBIC hyperparameter
        ratio: lambda_min / lambda_max
        m: Number of lambda values
        names: Optional node names
        strict: Raise NotConverged instead of keeping a non-converged fit

    Returns:
        Tuple of (selected partial-correlation network, full EBIC trace)
    """
    network, trace, _ = select_path(S, n, gamma, ratio, m, names, strict)
    return network, trace
