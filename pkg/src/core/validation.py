import logging
from typing import Optional

import numpy as np
import pandas as pd

from config.constants import MAX_ORDINAL_LEVELS
from src.models.errors import EmptyInput, InputError, TooFewRows
from src.models.network import Dataset

logger = logging.getLogger(__name__)


class DatasetValidator:
    """Validates observation tables and decides between Pearson and polychoric input"""

    def __init__(self, max_levels: int = MAX_ORDINAL_LEVELS):
        """
        Initialize validator

        Args:
            max_levels: Most distinct values a column may have to count as ordinal
        """
        self.max_levels = max_levels

    def detect_kind(self, values: np.ndarray) -> str:
        """
        Classify a data matrix as ordinal or continuous

        Args:
            values: n x p numeric matrix

        Returns:
            "ordinal" if every value is integral and every column has at most
            max_levels distinct values, "continuous" otherwise
        """
        values = np.asarray(values, dtype=float)
        if not np.all(values == np.round(values)):
            return "continuous"
        for j in range(values.shape[1]):
            if np.unique(values[:, j]).size > self.max_levels:
                return "continuous"
        return "ordinal"

    def validate_frame(self, frame: pd.DataFrame, kind: Optional[str] = None,
                       source: str = "data") -> Dataset:
        """
        Check a loaded table and convert it to a Dataset

        Args:
            frame: Table with one column per variable
            kind: "ordinal", "continuous" or None to auto-detect
            source: Name used in error messages

        Returns:
            Validated Dataset

        Raises:
            EmptyInput: If the table has no rows or columns
            InputError: If values are missing or non-numeric
        """
        logger.info(f"Validating dataset from {source}")

        if frame.empty or frame.shape[1] == 0:
            raise EmptyInput(f"No observations found in {source}")

        non_numeric = [c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])]
        if non_numeric:
            raise InputError(f"Non-numeric columns in {source}: {non_numeric}")

        values = frame.to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            raise InputError(f"Missing or infinite values in {source}")
        if values.shape[0] < 2:
            raise TooFewRows(values.shape[0])

        detected = self.detect_kind(values)
        if kind is None or kind == "auto":
            kind = detected
            logger.info(f"Detected {kind} data ({values.shape[0]} rows, {values.shape[1]} columns)")
        elif kind != detected:
            logger.warning(f"Data looks {detected} but {kind} was requested")

        if kind == "ordinal":
            self._check_ordinal(values, source)

        return Dataset(values, names=[str(c) for c in frame.columns], kind=kind)

    def _check_ordinal(self, values: np.ndarray, source: str) -> None:
        """Ordinal columns must be integral; constant columns are reported"""
        if not np.all(values == np.round(values)):
            raise InputError(f"Ordinal data in {source} must be integer-valued")
        for j in range(values.shape[1]):
            n_levels = np.unique(values[:, j]).size
            if n_levels < 2:
                logger.warning(f"Column {j} in {source} is constant")
            elif n_levels > self.max_levels:
                logger.warning(f"Column {j} in {source} has {n_levels} levels")
