"""Correlation estimation: Pearson for continuous data, two-step polychoric for ordinal data.

The polychoric estimator fixes each variable's thresholds from its margins
and then maximizes the bivariate-normal likelihood of the contingency table
over the latent correlation alone.
"""
import logging
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr
from scipy.stats import norm

from config.constants import CELL_PROB_FLOOR, EIGEN_FLOOR, RHO_BOUND, RHO_XTOL
from src.models.errors import (
    DegenerateTable, DimensionMismatch, EmptyInput, InputError, RhoOutOfRange,
    TooFewRows, ZeroVariance,
)
from src.models.network import CorrelationMatrix, DataLike, ThresholdSet, as_matrix

logger = logging.getLogger(__name__)

_TWO_PI = 2.0 * np.pi

# Gauss-Legendre half-rules (abscissae in (0, 1), weights) of order 6, 12 and 20
_GL_X = {
    6: [0.9324695142031522, 0.6612093864662647, 0.2386191860831970],
    12: [0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
         0.5873179542866171, 0.3678314989981802, 0.1252334085114692],
    20: [0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
         0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
         0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
         0.07652652113349733],
}
_GL_W = {
    6: [0.1713244923791705, 0.3607615730481384, 0.4679139345726904],
    12: [0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
         0.2031674267230659, 0.2334925365383547, 0.2491470458134029],
    20: [0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
         0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
         0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
         0.1527533871307259],
}


def pearson_matrix(data: DataLike) -> CorrelationMatrix:
    """
    Product-moment correlation matrix of continuous data

    Args:
        data: n x p observations

    Returns:
        Correlation matrix with exact unit diagonal

    Raises:
        TooFewRows: If n < 2
        ZeroVariance: If a column is constant
    """
    x = as_matrix(data)
    n, p = x.shape
    if n < 2:
        raise TooFewRows(n)
    constant = np.flatnonzero(np.ptp(x, axis=0) == 0)
    if constant.size:
        raise ZeroVariance(int(constant[0]))

    centered = x - x.mean(axis=0)
    z = centered / np.sqrt(np.sum(centered ** 2, axis=0))
    r = z.T @ z
    r = (r + r.T) / 2.0
    np.clip(r, -1.0, 1.0, out=r)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix(r, source="pearson")


def estimate_thresholds(column, levels: int) -> ThresholdSet:
    """
    Step one of the two-step polychoric estimator: thresholds from the margins

    Cumulative proportions are clamped to [1/(2n), 1 - 1/(2n)] before the
    normal quantile, so empty categories at either end yield finite sentinels.

    Args:
        column: Ordinal values in 1..levels
        levels: Number of levels

    Returns:
        ThresholdSet with levels - 1 cut-points
    """
    values = np.asarray(column).ravel()
    n = values.size
    if n < 1:
        raise EmptyInput("Cannot estimate thresholds of an empty column")
    codes = values.astype(int)
    if np.any(codes != values) or codes.min() < 1 or codes.max() > levels:
        raise InputError(f"Ordinal values must be integers in [1, {levels}]")

    counts = np.bincount(codes - 1, minlength=levels)
    cumulative = np.cumsum(counts)[:-1] / n
    cumulative = np.clip(cumulative, 1.0 / (2 * n), 1.0 - 1.0 / (2 * n))
    return ThresholdSet(norm.ppf(cumulative), levels)


def _upper_bvn(h: np.ndarray, k: np.ndarray, r: float) -> np.ndarray:
    """P(X > h, Y > k) for finite h, k and 0 < |r| < 1 (Genz's BVNU)"""
    abs_r = abs(r)
    order = 6 if abs_r < 0.3 else 12 if abs_r < 0.75 else 20
    half_x = np.asarray(_GL_X[order])
    half_w = np.asarray(_GL_W[order])
    x = np.concatenate((1.0 - half_x, 1.0 + half_x))
    w = np.concatenate((half_w, half_w))
    hk = h * k

    if abs_r < 0.925:
        hs = (h * h + k * k) / 2.0
        asr = np.arcsin(r) / 2.0
        sn = np.sin(asr * x)
        bvn = np.exp((sn * hk[..., None] - hs[..., None]) / (1.0 - sn ** 2)) @ w
        return bvn * asr / _TWO_PI + ndtr(-h) * ndtr(-k)

    if r < 0:
        k = -k
        hk = -hk
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        as_ = 1.0 - r * r
        a = np.sqrt(as_)
        bs = (h - k) ** 2
        asr = -(bs / as_ + hk) / 2.0
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 80.0
        bvn = np.where(asr > -100,
                       a * np.exp(asr) * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0
                                          + c * d * as_ * as_),
                       0.0)
        b = np.sqrt(bs)
        sp = np.sqrt(_TWO_PI) * ndtr(-b / a)
        bvn = np.where(hk > -100,
                       bvn - np.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0),
                       bvn)

        a = a / 2.0
        xs = (a * x) ** 2
        asr = -(bs[..., None] / xs + hk[..., None]) / 2.0
        sp = 1.0 + c[..., None] * xs * (1.0 + 5.0 * d[..., None] * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-(hk[..., None] / 2.0) * xs / (1.0 + rs) ** 2) / rs
        terms = np.where(asr > -100, np.exp(asr) * (sp - ep), 0.0)
        bvn = (a * (terms @ w) - bvn) / _TWO_PI

    if r > 0:
        return bvn + ndtr(-np.maximum(h, k))
    tail = np.where(h < 0, ndtr(k) - ndtr(h), ndtr(-h) - ndtr(-k))
    return np.where(h >= k, -bvn, tail - bvn)


def bivariate_normal_cdf(h, k, rho: float):
    """
    P(X <= h, Y <= k) for a standard bivariate normal with correlation rho

    Accepts scalars or broadcastable arrays for h and k; +/-inf are allowed and
    reduce to the marginal limits. Absolute accuracy is about 1e-15.

    Raises:
        RhoOutOfRange: If rho is not strictly inside (-1, 1)
    """
    if not -1.0 < rho < 1.0:
        raise RhoOutOfRange(rho)
    h, k = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(k, dtype=float))
    out = np.empty(h.shape)

    empty = (h == -np.inf) | (k == -np.inf)
    h_top = (h == np.inf) & ~empty
    k_top = (k == np.inf) & ~empty
    finite = ~(empty | h_top | k_top)

    out[empty] = 0.0
    out[h_top & k_top] = 1.0
    out[h_top & ~k_top] = ndtr(k[h_top & ~k_top])
    out[k_top & ~h_top] = ndtr(h[k_top & ~h_top])
    if np.any(finite):
        hf, kf = h[finite], k[finite]
        if rho == 0.0:
            out[finite] = ndtr(hf) * ndtr(kf)
        else:
            out[finite] = _upper_bvn(-hf, -kf, rho)

    np.clip(out, 0.0, 1.0, out=out)
    return float(out) if out.ndim == 0 else out


class _OrdinalColumn(NamedTuple):
    codes: np.ndarray
    levels: int
    boundaries: np.ndarray

    @property
    def sort_key(self):
        return (self.levels, self.codes.tobytes())


def _prepare_column(column) -> _OrdinalColumn:
    """Recode to observed categories 1..k and fix the thresholds"""
    values = np.asarray(column).ravel()
    if values.size == 0:
        raise EmptyInput("Cannot compute polychoric correlation of an empty column")
    categories, codes = np.unique(values, return_inverse=True)
    codes = codes.astype(np.int64) + 1
    levels = categories.size
    if levels < 2:
        raise DegenerateTable("Ordinal variable is constant; polychoric correlation undefined")
    return _OrdinalColumn(codes, levels, estimate_thresholds(codes, levels).boundaries)


def _negative_loglik(rho: float, table: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    cdf = bivariate_normal_cdf(a[:, None], b[None, :], rho)
    cells = cdf[1:, 1:] - cdf[:-1, 1:] - cdf[1:, :-1] + cdf[:-1, :-1]
    return float(-np.sum(table * np.log(np.maximum(cells, CELL_PROB_FLOOR))))


def _fit_rho(x: _OrdinalColumn, y: _OrdinalColumn) -> float:
    # Fixed argument order keeps the estimate exactly symmetric
    if x.sort_key > y.sort_key:
        x, y = y, x
    table = np.zeros((x.levels, y.levels))
    np.add.at(table, (x.codes - 1, y.codes - 1), 1.0)

    def objective(rho):
        return _negative_loglik(rho, table, x.boundaries, y.boundaries)

    result = minimize_scalar(objective, bounds=(-RHO_BOUND, RHO_BOUND),
                             method='bounded', options={'xatol': RHO_XTOL})
    best_rho, best_value = float(result.x), float(result.fun)
    for bound in (-RHO_BOUND, RHO_BOUND):
        value = objective(bound)
        if value < best_value:
            best_rho, best_value = bound, value
    return best_rho


def polychoric_pair(col_i, col_j) -> float:
    """
    Two-step maximum-likelihood polychoric correlation of two ordinal columns

    Args:
        col_i: First ordinal column
        col_j: Second ordinal column

    Returns:
        Latent correlation estimate in [-0.9999, 0.9999]

    Raises:
        DegenerateTable: If either column is constant
    """
    x = np.asarray(col_i).ravel()
    y = np.asarray(col_j).ravel()
    if x.shape != y.shape:
        raise DimensionMismatch(x.shape, y.shape)
    return _fit_rho(_prepare_column(x), _prepare_column(y))


def polychoric_matrix(data: DataLike) -> CorrelationMatrix:
    """
    Pairwise polychoric correlation matrix, repaired to PD when needed

    Raises:
        DegenerateTable: With the offending column indices
    """
    x = as_matrix(data)
    n, p = x.shape
    if n < 1:
        raise EmptyInput("Ordinal dataset has no rows")

    columns = []
    for j in range(p):
        try:
            columns.append(_prepare_column(x[:, j]))
        except DegenerateTable as e:
            raise DegenerateTable(str(e), columns=(j,)) from e

    r = np.eye(p)
    for i, j in combinations(range(p), 2):
        r[i, j] = r[j, i] = _fit_rho(columns[i], columns[j])
    return _repair_pairwise(r, "polychoric")


def _repair_pairwise(r: np.ndarray, source: str) -> CorrelationMatrix:
    min_eig = float(np.linalg.eigvalsh(r).min())
    if min_eig >= EIGEN_FLOOR:
        return CorrelationMatrix(r, source=source)
    logger.warning(f"Pairwise {source} matrix is not PD (min eigenvalue {min_eig:.3e}); "
                   "repairing by eigenvalue clipping")
    repaired = nearest_pd(r)
    return CorrelationMatrix(repaired.values, source=source, repair_log=repaired.repair_log)


def nearest_pd(matrix, floor: float = EIGEN_FLOOR) -> CorrelationMatrix:
    """
    Nearest positive-definite correlation matrix by eigenvalue clipping

    Eigenvalues below ``floor`` are raised to it, the matrix is rebuilt and
    rescaled to a unit diagonal. Inputs that are already PD correlation
    matrices come back unchanged.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("nearest_pd expects a square matrix")
    a = (a + a.T) / 2.0
    p = a.shape[0]

    eigvals, eigvecs = np.linalg.eigh(a)
    if eigvals.min() >= floor and np.all(np.diag(a) == 1.0):
        return CorrelationMatrix(a, source="repaired")

    clipped = (eigvecs * np.maximum(eigvals, floor)) @ eigvecs.T
    scale = np.sqrt(np.diag(clipped))
    out = clipped / np.outer(scale, scale)
    out = (out + out.T) / 2.0
    np.fill_diagonal(out, 1.0)

    # Rescaling can push the smallest eigenvalue back under the floor
    min_eig = float(np.linalg.eigvalsh(out).min())
    if min_eig < floor:
        target = 1.5 * floor
        t = (target - min_eig) / (1.0 - min_eig)
        out = (1.0 - t) * out + t * np.eye(p)
        np.fill_diagonal(out, 1.0)
    np.clip(out, -1.0, 1.0, out=out)

    log = [f"eigenvalue clipping at {floor:g}: min eigenvalue {eigvals.min():.3e} -> "
           f"{float(np.linalg.eigvalsh(out).min()):.3e}"]
    return CorrelationMatrix(out, source="repaired", repair_log=log)
