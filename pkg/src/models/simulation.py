from dataclasses import dataclass, field, asdict
from itertools import product
from typing import Iterator, List, Optional, Tuple

from config.constants import (
    DATA_TYPES, DEFAULT_CUTOFF, DEFAULT_DENSITY, DEFAULT_N_LAMBDAS, DEFAULT_P,
    DEFAULT_REPLICATIONS, DEFAULT_ROOT_SEED, BENCHMARK_GAMMAS, BENCHMARK_RATIOS,
    BENCHMARK_SAMPLE_SIZES, RECORD_COLUMNS,
)
from src.models.errors import ConfigError


@dataclass(frozen=True)
class Condition:
    """One cell of the factorial design"""
    n: int
    gamma_index: int
    gamma: float
    ratio_index: int
    ratio: float
    data_type: str


@dataclass
class SimConfig:
    """Factorial simulation design and run options"""
    sample_sizes: List[int] = field(default_factory=lambda: list(BENCHMARK_SAMPLE_SIZES))
    gammas: List[float] = field(default_factory=lambda: list(BENCHMARK_GAMMAS))
    ratios: List[float] = field(default_factory=lambda: list(BENCHMARK_RATIOS))
    data_types: List[str] = field(default_factory=lambda: list(DATA_TYPES))
    replications: int = DEFAULT_REPLICATIONS
    n_lambdas: int = DEFAULT_N_LAMBDAS
    root_seed: int = DEFAULT_ROOT_SEED
    truth_path: Optional[str] = None
    truth_p: int = DEFAULT_P
    truth_density: float = DEFAULT_DENSITY
    truth_seed: int = 1
    cutoff: float = DEFAULT_CUTOFF
    fixed_thresholds: bool = False
    workers: int = 1
    records_path: Optional[str] = None
    summary_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check the config invariants, raising ConfigError on the first violation"""
        for name in ('sample_sizes', 'gammas', 'ratios', 'data_types'):
            if not getattr(self, name):
                raise ConfigError(f"'{name}' must not be empty")
        if any(int(n) < 2 for n in self.sample_sizes):
            raise ConfigError("sample sizes must be at least 2")
        if any(g < 0 for g in self.gammas):
            raise ConfigError("gamma values must be nonnegative")
        if any(not 0 < r < 1 for r in self.ratios):
            raise ConfigError("ratio values must lie in (0, 1)")
        unknown = set(self.data_types) - set(DATA_TYPES)
        if unknown:
            raise ConfigError(f"unknown data types: {sorted(unknown)}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.n_lambdas < 2:
            raise ConfigError("n_lambdas must be at least 2")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.truth_path is None and not 0 < self.truth_density < 1:
            raise ConfigError("truth density must lie in (0, 1)")

    def conditions(self) -> Iterator[Condition]:
        """Conditions in the deterministic output order"""
        for n, (gi, gamma), (ri, ratio), data_type in product(
                self.sample_sizes, enumerate(self.gammas),
                enumerate(self.ratios), self.data_types):
            yield Condition(int(n), gi, float(gamma), ri, float(ratio), data_type)

    def record_count(self) -> int:
        return (len(self.sample_sizes) * len(self.gammas) * len(self.ratios)
                * len(self.data_types) * self.replications)

    @classmethod
    def benchmark(cls, replications: int = 1000, **kwargs) -> 'SimConfig':
        """Full 6 x 5 x 3 x 2 benchmark design"""
        return cls(replications=replications, **kwargs)


@dataclass
class SimRecord:
    """Outcome of one replication of one condition"""
    n: int
    gamma: float
    R: float
    data_type: str
    rep: int
    seed: int
    sensitivity: float = float('nan')
    specificity: float = float('nan')
    weight_correlation: float = float('nan')
    edges_true: int = 0
    edges_est: Optional[int] = None
    tp: Optional[int] = None
    fp: Optional[int] = None
    tn: Optional[int] = None
    fn: Optional[int] = None
    converged: bool = False
    pd_repaired: bool = False
    elapsed_ms: float = 0.0

    @property
    def key(self) -> Tuple:
        return (self.n, self.gamma, self.R, self.data_type, self.rep)

    def to_dict(self) -> dict:
        """Record as a dict in CSV column order"""
        data = asdict(self)
        return {column: data[column] for column in RECORD_COLUMNS}


@dataclass
class BoxplotSummary:
    """Tukey boxplot statistics of one metric in one condition"""
    metric: str
    n: int
    gamma: float
    R: float
    data_type: str
    count: int
    n_missing: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['n_outliers'] = len(self.outliers)
        data['outliers'] = ';'.join(f"{v:.6g}" for v in self.outliers)
        return data

    def to_bxp(self, label: str = "") -> dict:
        """Statistics in the form matplotlib's Axes.bxp expects"""
        return {
            'label': label,
            'med': self.median,
            'q1': self.q1,
            'q3': self.q3,
            'whislo': self.whisker_low,
            'whishi': self.whisker_high,
            'fliers': list(self.outliers),
        }
