"""Graphical lasso by block coordinate descent with an unpenalized diagonal.

Maximizes log det K - trace(S K) - lambda * sum_{i != j} |k_ij|. Each sweep
visits every column, solves the lasso subproblem for that column's regression
coefficients by coordinate descent, and updates the working covariance W.
The problem is first split into the connected components of |s_ij| > lambda,
which are solved independently.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from config.constants import (
    GLASSO_INNER_TOL, GLASSO_MAX_INNER, GLASSO_MAX_SWEEPS, GLASSO_TOL,
    LOADING_EPS, ZERO_SNAP,
)
from src.models.errors import (
    GeLassoError, InputError, NonPDInput, NonPositiveDiagonal, NotConverged, NotPD,
)
from src.models.network import CorrelationMatrix, PcorNetwork, PrecisionMatrix

logger = logging.getLogger(__name__)


def _as_array(S) -> np.ndarray:
    if isinstance(S, CorrelationMatrix):
        return S.values
    return np.asarray(S, dtype=float)


def prepare_input(S) -> Tuple[np.ndarray, bool]:
    """
    Symmetrize S and load its diagonal when it is not positive definite

    Returns:
        Tuple of (matrix, whether diagonal loading was applied)
    """
    s = _as_array(S)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError("Glasso input must be a square matrix")
    if not np.all(np.isfinite(s)):
        raise NonPDInput(float('nan'), "glasso input")
    s = (s + s.T) / 2.0
    min_eig = float(np.linalg.eigvalsh(s).min())
    if min_eig > 0:
        return s, False
    loading = abs(min_eig) + LOADING_EPS
    logger.warning(f"Glasso input not PD (min eigenvalue {min_eig:.3e}); "
                   f"loading diagonal by {loading:.3e}")
    s = s + loading * np.eye(s.shape[0])
    if np.linalg.eigvalsh(s).min() <= 0:
        raise NonPDInput(min_eig, "glasso input")
    return s, True


def _soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def _lasso_cd(V: np.ndarray, u: np.ndarray, lam: float, beta: np.ndarray) -> np.ndarray:
    """Coordinate descent for min 1/2 b'Vb - u'b + lam |b|_1, warm-started at beta"""
    m = u.size
    beta = beta.copy()
    grad = u - V @ beta
    diag = np.diag(V)
    active = np.ones(m, dtype=bool)
    full_pass = True
    for _ in range(GLASSO_MAX_INNER):
        max_delta = 0.0
        for k in (range(m) if full_pass else np.flatnonzero(active)):
            old = beta[k]
            new = _soft_threshold(grad[k] + diag[k] * old, lam) / diag[k]
            if new != old:
                delta = new - old
                grad -= V[:, k] * delta
                beta[k] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < GLASSO_INNER_TOL:
            if full_pass:
                break
            # Active set settled; confirm with a pass over every coordinate
            full_pass = True
        else:
            full_pass = False
            active = beta != 0
    return beta


def _block_descent(s: np.ndarray, lam: float,
                   w_init: Optional[np.ndarray],
                   b_init: Optional[np.ndarray],
                   max_iter: int) -> Tuple[np.ndarray, np.ndarray, int, bool]:
    """Solve one connected block; returns (K, W, sweeps, converged)"""
    p = s.shape[0]
    if w_init is not None:
        W = w_init.copy()
        np.fill_diagonal(W, np.diag(s))
        B = b_init.copy()
    else:
        W = s.copy()
        B = np.zeros((p, p))

    offdiag = ~np.eye(p, dtype=bool)
    threshold = GLASSO_TOL * np.mean(np.abs(s[offdiag]))
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        W_old = W.copy()
        for j in range(p):
            rest = np.arange(p) != j
            V = W[np.ix_(rest, rest)]
            beta = _lasso_cd(V, s[rest, j], lam, B[rest, j])
            B[rest, j] = beta
            w12 = V @ beta
            W[rest, j] = w12
            W[j, rest] = w12
        change = np.mean(np.abs(W - W_old)[offdiag])
        if not np.isfinite(change):
            raise NotPD(float('nan'), "glasso working covariance")
        if change <= threshold:
            converged = True
            break

    K = np.zeros((p, p))
    for j in range(p):
        rest = np.arange(p) != j
        k_jj = 1.0 / (W[j, j] - W[rest, j] @ B[rest, j])
        K[j, j] = k_jj
        K[rest, j] = -B[rest, j] * k_jj
    return K, W, sweeps, converged


def _finalize(K: np.ndarray) -> np.ndarray:
    """Symmetrize, keep zeros found in either triangle, snap tiny entries"""
    zero = (K == 0) | (K.T == 0)
    K = (K + K.T) / 2.0
    K[zero] = 0.0
    K[np.abs(K) < ZERO_SNAP] = 0.0
    return K


def _warm_blocks(warm_start: Optional[PrecisionMatrix], p: int):
    if warm_start is None:
        return None, None
    K0 = np.asarray(warm_start.values, dtype=float)
    if K0.shape != (p, p):
        raise InputError("Warm start has the wrong dimension")
    W0 = warm_start.covariance
    if W0 is None:
        try:
            W0 = linalg.inv(K0)
        except linalg.LinAlgError:
            return None, None
    B0 = -K0 / np.diag(K0)[None, :]
    np.fill_diagonal(B0, 0.0)
    return W0, B0


def glasso_fit(S, lam: float, warm_start: Optional[PrecisionMatrix] = None,
               max_iter: int = GLASSO_MAX_SWEEPS) -> PrecisionMatrix:
    """
    Fit the graphical lasso at a single penalty

    Args:
        S: Correlation (or covariance) matrix
        lam: Off-diagonal L1 penalty, lam >= 0
        warm_start: Previous solution to start from
        max_iter: Maximum number of sweeps per block

    Returns:
        PrecisionMatrix; converged is False when max_iter was hit
    """
    if lam < 0:
        raise InputError(f"Penalty must be nonnegative, got {lam}")
    s, loaded = prepare_input(S)
    p = s.shape[0]

    if lam == 0:
        K = linalg.inv(s)
        K = (K + K.T) / 2.0
        return PrecisionMatrix(K, lam, 0, True, covariance=s.copy(), loaded=loaded)

    adjacency = np.abs(s) > lam
    np.fill_diagonal(adjacency, False)
    n_blocks, labels = connected_components(csr_matrix(adjacency), directed=False)

    W0, B0 = _warm_blocks(warm_start, p)
    K = np.zeros((p, p))
    W = np.diag(np.diag(s))
    total_sweeps = 0
    converged = True
    for block in range(n_blocks):
        idx = np.flatnonzero(labels == block)
        if idx.size == 1:
            i = idx[0]
            K[i, i] = 1.0 / s[i, i]
            continue
        grid = np.ix_(idx, idx)
        w_init = b_init = None
        if W0 is not None:
            w_init = W0[grid].copy()
            np.fill_diagonal(w_init, np.diag(s[grid]))
            if not _is_pd(w_init):
                w_init = None
            else:
                b_init = B0[grid]
        K_block, W_block, sweeps, ok = _block_descent(s[grid], lam, w_init, b_init, max_iter)
        K[grid] = K_block
        W[grid] = W_block
        total_sweeps = max(total_sweeps, sweeps)
        converged = converged and ok

    K = _finalize(K)
    if not converged:
        logger.warning(f"Glasso did not converge in {max_iter} sweeps at lambda={lam:.4g}")
    if not _is_pd(K):
        raise NotPD(float(np.linalg.eigvalsh(K).min()), "glasso estimate")
    return PrecisionMatrix(K, lam, total_sweeps, converged, covariance=W, loaded=loaded)


def _is_pd(a: np.ndarray) -> bool:
    try:
        linalg.cholesky(a, lower=True)
        return True
    except linalg.LinAlgError:
        return False


def glasso_path(S, lambdas: Sequence[float], max_iter: int = GLASSO_MAX_SWEEPS,
                strict: bool = False) -> List[PrecisionMatrix]:
    """
    Fit a descending sequence of penalties, warm-starting each fit at the previous one

    Edge counts are expected to grow as lambda shrinks; violations are logged,
    not corrected.

    Raises:
        NotConverged: If strict and any fit hit max_iter
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise InputError("Lambda path is empty")
    if np.any(np.diff(lambdas) > 0):
        raise InputError("Lambda path must be sorted in descending order")

    path: List[PrecisionMatrix] = []
    previous: Optional[PrecisionMatrix] = None
    for index, lam in enumerate(lambdas):
        try:
            fit = glasso_fit(S, float(lam), warm_start=previous, max_iter=max_iter)
        except GeLassoError as e:
            e.lambda_index = index
            logger.error(f"Glasso failed at lambda index {index} ({lam:.4g}): {e}")
            raise
        if strict and not fit.converged:
            raise NotConverged(max_iter, lambda_index=index)
        if previous is not None and fit.edge_count < previous.edge_count:
            logger.warning(f"Edge count dropped from {previous.edge_count} to "
                           f"{fit.edge_count} at lambda index {index}")
        path.append(fit)
        previous = fit
    return path


def precision_to_pcor(K, names: Optional[List[str]] = None) -> PcorNetwork:
    """
    Partial-correlation network from a precision matrix

    weight_ij = -k_ij / sqrt(k_ii k_jj); exact zeros stay exact zeros.

    Raises:
        NonPositiveDiagonal: If any k_ii <= 0
    """
    k = K.values if isinstance(K, PrecisionMatrix) else np.asarray(K, dtype=float)
    diag = np.diag(k)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise NonPositiveDiagonal(int(bad[0]), float(diag[bad[0]]))
    scale = np.sqrt(diag)
    weights = -k / np.outer(scale, scale)
    weights = (weights + weights.T) / 2.0
    np.clip(weights, -1.0, 1.0, out=weights)
    np.fill_diagonal(weights, 0.0)
    weights[weights == 0] = 0.0
    return PcorNetwork(weights, names=list(names or []))


def penalized_objective(K, S, lam: float) -> float:
    """log det K - trace(S K) - lam * sum of off-diagonal |k_ij|"""
    k = K.values if isinstance(K, PrecisionMatrix) else np.asarray(K, dtype=float)
    s = _as_array(S)
    sign, logdet = np.linalg.slogdet(k)
    if sign <= 0:
        return -np.inf
    off = np.abs(k).sum() - np.abs(np.diag(k)).sum()
    return float(logdet - np.sum(s * k) - lam * off)


def kkt_residual(K, S, lam: float) -> float:
    """
    Largest violation of the glasso optimality conditions

    Diagonal: (K^-1)_ii = s_ii. Nonzero k_ij: (K^-1)_ij - s_ij = lam * sign(k_ij).
    Zero k_ij: |(K^-1)_ij - s_ij| <= lam.
    """
    k = K.values if isinstance(K, PrecisionMatrix) else np.asarray(K, dtype=float)
    s = _as_array(S)
    gap = linalg.inv(k) - s
    p = k.shape[0]
    offdiag = ~np.eye(p, dtype=bool)
    nonzero = offdiag & (k != 0)
    zero = offdiag & (k == 0)

    residual = float(np.max(np.abs(np.diag(gap)))) if p else 0.0
    if np.any(nonzero):
        residual = max(residual, float(np.max(np.abs(gap[nonzero] - lam * np.sign(k[nonzero])))))
    if np.any(zero):
        residual = max(residual, float(np.max(np.abs(gap[zero]) - lam)))
    return max(residual, 0.0)
