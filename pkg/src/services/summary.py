import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from config.constants import CONDITION_COLUMNS, METRICS
from src.models.errors import EmptyInput, InputError
from src.models.simulation import BoxplotSummary
from src.services.storage import StorageManager

logger = logging.getLogger(__name__)

WHISKER_SPAN = 1.5


def boxplot_stats(values) -> Tuple[float, float, float, float, float, List[float]]:
    """
    Tukey boxplot statistics of a sample

    Quartiles interpolate linearly between order statistics (numpy's default
    'linear' method). Whiskers reach the most extreme observations within
    1.5 IQR of the quartiles; everything beyond is an outlier.

    Returns:
        Tuple of (median, q1, q3, whisker_low, whisker_high, outliers)
    """
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        nan = float('nan')
        return nan, nan, nan, nan, nan, []
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    low_fence = q1 - WHISKER_SPAN * iqr
    high_fence = q3 + WHISKER_SPAN * iqr
    inside = x[(x >= low_fence) & (x <= high_fence)]
    outliers = [float(v) for v in x if v < low_fence or v > high_fence]
    return (float(median), float(q1), float(q3),
            float(inside.min()), float(inside.max()), outliers)


class SummaryBuilder:
    """Reduces simulation records to per-condition boxplot statistics"""

    def __init__(self, metrics: List[str] = None):
        self.metrics = list(metrics or METRICS)

    def summarize(self, records: Union[pd.DataFrame, str, Path]) -> Tuple[List[BoxplotSummary], pd.DataFrame]:
        """
        Boxplot statistics per (metric, condition)

        Args:
            records: Records table or path to a records CSV

        Returns:
            Tuple of (summaries, summary table with one row per summary)

        Raises:
            EmptyInput: If there are no records
        """
        if not isinstance(records, pd.DataFrame):
            records = StorageManager().read_records(records)
        if records.empty:
            raise EmptyInput("No records to summarize")

        missing = [c for c in CONDITION_COLUMNS + self.metrics if c not in records.columns]
        if missing:
            raise InputError(f"Records lack columns {missing}")

        frame = records[CONDITION_COLUMNS + self.metrics].copy()
        for metric in self.metrics:
            frame[metric] = pd.to_numeric(frame[metric], errors='coerce')

        summaries: List[BoxplotSummary] = []
        for (n, gamma, ratio, data_type), group in frame.groupby(CONDITION_COLUMNS, sort=True):
            for metric in self.metrics:
                column = group[metric]
                present = column.dropna().to_numpy()
                median, q1, q3, lo, hi, outliers = boxplot_stats(present)
                summaries.append(BoxplotSummary(
                    metric=metric, n=int(n), gamma=float(gamma), R=float(ratio),
                    data_type=str(data_type), count=int(present.size),
                    n_missing=int(column.isna().sum()), median=median, q1=q1, q3=q3,
                    whisker_low=lo, whisker_high=hi, outliers=outliers,
                ))

        table = pd.DataFrame([s.to_dict() for s in summaries])
        logger.info(f"Summarized {len(records)} records into {len(summaries)} boxplots")
        return summaries, table
