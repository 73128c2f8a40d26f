from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import pandas as pd


@dataclass
class Dataset:
    """n x p observations, either continuous or ordinal (integer levels 1..k)"""
    values: np.ndarray
    names: List[str] = field(default_factory=list)
    kind: str = "continuous"

    def __post_init__(self):
        """Validate dataset shape and kind after initialization"""
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("Dataset values must be a 2-D array")
        if self.kind not in ("continuous", "ordinal"):
            raise ValueError(f"Unknown dataset kind: {self.kind}")
        if not self.names:
            self.names = [f"V{j + 1}" for j in range(self.values.shape[1])]
        if len(self.names) != self.values.shape[1]:
            raise ValueError("Number of names must match number of columns")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def is_ordinal(self) -> bool:
        return self.kind == "ordinal"

    def to_frame(self) -> pd.DataFrame:
        """Convert dataset to a data frame, integer-typed when ordinal"""
        values = self.values.astype(int) if self.is_ordinal else self.values
        return pd.DataFrame(values, columns=self.names)


DataLike = Union[Dataset, np.ndarray]


def as_matrix(data: DataLike) -> np.ndarray:
    """Return the raw observation matrix of a Dataset or array"""
    if isinstance(data, Dataset):
        return data.values
    return np.asarray(data, dtype=float)


@dataclass
class ThresholdSet:
    """Sorted z-scale cut-points of one ordinal variable (levels - 1 of them)"""
    values: np.ndarray
    levels: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.levels - 1,):
            raise ValueError("A ThresholdSet holds levels - 1 cut-points")
        if np.any(np.diff(self.values) < 0):
            raise ValueError("Thresholds must be sorted ascending")

    @property
    def boundaries(self) -> np.ndarray:
        """Cut-points padded with the -inf/+inf sentinels"""
        return np.concatenate(([-np.inf], self.values, [np.inf]))


@dataclass
class CorrelationMatrix:
    """Symmetric unit-diagonal correlation matrix plus its provenance"""
    values: np.ndarray
    source: str = "pearson"
    repair_log: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("Correlation matrix must be square")

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def repaired(self) -> bool:
        return bool(self.repair_log)

    def max_abs_offdiag(self) -> float:
        """Largest absolute off-diagonal entry"""
        if self.p < 2:
            return 0.0
        upper = self.values[np.triu_indices(self.p, k=1)]
        return float(np.max(np.abs(upper)))


def upper_triangle(matrix: np.ndarray) -> np.ndarray:
    """Strict upper-triangle entries in row-major order"""
    return matrix[np.triu_indices(matrix.shape[0], k=1)]


@dataclass
class PrecisionMatrix:
    """Glasso estimate of the inverse covariance at a fixed penalty"""
    values: np.ndarray
    lam: float
    n_iter: int = 0
    converged: bool = True
    covariance: Optional[np.ndarray] = None
    loaded: bool = False

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(upper_triangle(self.values)))


@dataclass
class PcorNetwork:
    """Partial-correlation network: symmetric weights, zero diagonal"""
    weights: np.ndarray
    names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise ValueError("Network weights must be square")
        if not self.names:
            self.names = [f"V{j + 1}" for j in range(self.p)]

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.p * (self.p - 1) // 2

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(upper_triangle(self.weights)))

    @property
    def density(self) -> float:
        return self.edge_count / self.n_pairs if self.n_pairs else 0.0

    def edge_list(self) -> pd.DataFrame:
        """Nonzero edges with 1-based node indices"""
        rows, cols = np.triu_indices(self.p, k=1)
        w = self.weights[rows, cols]
        keep = w != 0
        return pd.DataFrame({
            'node_i': rows[keep] + 1,
            'node_j': cols[keep] + 1,
            'weight': w[keep],
        })

    @classmethod
    def empty(cls, p: int, names: Optional[List[str]] = None) -> 'PcorNetwork':
        return cls(np.zeros((p, p)), names=list(names or []))


@dataclass
class TrueNetwork:
    """Network used as simulation truth"""
    network: PcorNetwork
    provenance: str = ""
    repaired: bool = False

    @property
    def p(self) -> int:
        return self.network.p

    @property
    def weights(self) -> np.ndarray:
        return self.network.weights


@dataclass
class OrdinalScheme:
    """Per-variable thresholds used to cut latent data into ordinal levels"""
    thresholds: np.ndarray
    levels: int = 5

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        if self.thresholds.ndim != 2 or self.thresholds.shape[1] != self.levels - 1:
            raise ValueError("Scheme needs levels - 1 thresholds per variable")

    @property
    def p(self) -> int:
        return self.thresholds.shape[0]

    def threshold_set(self, column: int) -> ThresholdSet:
        return ThresholdSet(self.thresholds[column], self.levels)


@dataclass
class LambdaGrid:
    """Descending, geometrically spaced penalty grid"""
    values: np.ndarray
    ratio: float
    lambda_max: float

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class EbicTrace:
    """Per-lambda EBIC scores of a fitted path and the selected index"""
    lambdas: np.ndarray
    edge_counts: np.ndarray
    log_likelihoods: np.ndarray
    ebic_values: np.ndarray
    converged: np.ndarray
    selected: int
    gamma: float
    n: int

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def selected_lambda(self) -> float:
        return float(self.lambdas[self.selected])

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def to_frame(self) -> pd.DataFrame:
        """One row per lambda, flagging the selected one"""
        return pd.DataFrame({
            'lambda': self.lambdas,
            'edges': self.edge_counts,
            'loglik': self.log_likelihoods,
            'ebic': self.ebic_values,
            'converged': self.converged,
            'selected': np.arange(len(self)) == self.selected,
        })


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def true_edges(self) -> int:
        return self.tp + self.fn

    @property
    def true_non_edges(self) -> int:
        return self.tn + self.fp


@dataclass
class ComparisonResult:
    """Agreement between an estimated network and the truth"""
    sensitivity: float
    specificity: float
    weight_correlation: float
    counts: ConfusionCounts
    estimated_empty: bool

    def to_dict(self) -> dict:
        return {
            'sensitivity': self.sensitivity,
            'specificity': self.specificity,
            'weight_correlation': self.weight_correlation,
            'tp': self.counts.tp,
            'fp': self.counts.fp,
            'tn': self.counts.tn,
            'fn': self.counts.fn,
        }
