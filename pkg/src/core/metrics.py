"""Edge-recovery scores comparing an estimated network with the true one."""
import logging

import numpy as np

from src.models.errors import DimensionMismatch, NoTrueEdges, NoTrueNonEdges
from src.models.network import (
    ComparisonResult, ConfusionCounts, PcorNetwork, TrueNetwork, upper_triangle,
)

logger = logging.getLogger(__name__)


def _weights(net) -> np.ndarray:
    if isinstance(net, (PcorNetwork, TrueNetwork)):
        return net.weights
    return np.asarray(net, dtype=float)


def _paired_upper(truth, estimate):
    t = _weights(truth)
    e = _weights(estimate)
    if t.shape != e.shape:
        raise DimensionMismatch(t.shape, e.shape)
    return upper_triangle(t), upper_triangle(e)


def confusion_counts(truth, estimate) -> ConfusionCounts:
    """Edge-presence confusion counts over the upper triangle; present means strictly nonzero"""
    t, e = _paired_upper(truth, estimate)
    true_edge = t != 0
    est_edge = e != 0
    return ConfusionCounts(
        tp=int(np.sum(true_edge & est_edge)),
        fp=int(np.sum(~true_edge & est_edge)),
        tn=int(np.sum(~true_edge & ~est_edge)),
        fn=int(np.sum(true_edge & ~est_edge)),
    )


def sensitivity(counts: ConfusionCounts) -> float:
    """TP / (TP + FN)"""
    if counts.true_edges == 0:
        raise NoTrueEdges()
    return counts.tp / counts.true_edges


def specificity(counts: ConfusionCounts) -> float:
    """TN / (TN + FP)"""
    if counts.true_non_edges == 0:
        raise NoTrueNonEdges()
    return counts.tn / counts.true_non_edges


def weight_correlation(truth, estimate) -> float:
    """
    Pearson correlation of all upper-triangle weights, zeros included

    Returns 0.0 when the estimate has no edges and NaN when either weight
    vector is otherwise constant.
    """
    t, e = _paired_upper(truth, estimate)
    if not np.any(e != 0):
        return 0.0
    if np.ptp(t) == 0 or np.ptp(e) == 0:
        return float('nan')
    return float(np.corrcoef(t, e)[0, 1])


def compare_networks(truth, estimate) -> ComparisonResult:
    """All metrics at once; undefined rates become NaN instead of raising"""
    counts = confusion_counts(truth, estimate)
    try:
        sens = sensitivity(counts)
    except NoTrueEdges:
        logger.debug("Truth has no edges; sensitivity recorded as missing")
        sens = float('nan')
    try:
        spec = specificity(counts)
    except NoTrueNonEdges:
        logger.debug("Truth is complete; specificity recorded as missing")
        spec = float('nan')
    return ComparisonResult(
        sensitivity=sens,
        specificity=spec,
        weight_correlation=weight_correlation(truth, estimate),
        counts=counts,
        estimated_empty=counts.tp + counts.fp == 0,
    )
