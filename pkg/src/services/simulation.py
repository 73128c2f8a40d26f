"""Factorial simulation harness: seeded replications, parallel execution, resumable records."""
import configparser
import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from config.constants import DATA_TYPES, ORDINAL_LEVELS
from config.settings import OUTPUT_DIR, get_env_setting
from src.core.correlation import pearson_matrix, polychoric_matrix
from src.core.generation import (
    discretize, make_ordinal_scheme, pcor_to_covariance, sample_mvn,
    synthetic_true_network,
)
from src.core.metrics import compare_networks
from src.core.model_selection import select_path
from src.models.errors import ConfigError, GeLassoError
from src.models.network import OrdinalScheme, TrueNetwork
from src.models.simulation import SimConfig, SimRecord
from src.services.storage import StorageManager

logger = logging.getLogger(__name__)

BATCH_PER_WORKER = 8


def derive_seed(root_seed: int, n: int, gamma_index: int, ratio_index: int,
                data_type: str, rep: int) -> int:
    """
    Stable per-replication seed

    The first 8 bytes of SHA-256 over 'root|n|gamma_index|ratio_index|type|rep',
    read big-endian and reduced modulo 2**63. Any single cell can be re-run
    from these values alone.
    """
    key = f"{root_seed}|{n}|{gamma_index}|{ratio_index}|{data_type}|{rep}".encode('ascii')
    return int.from_bytes(hashlib.sha256(key).digest()[:8], 'big') % (2 ** 63)


def split_seed(seed: int) -> Tuple[int, int]:
    data_seed, scheme_seed = np.random.SeedSequence(seed).generate_state(2)
    return int(data_seed), int(scheme_seed)


def run_replication(truth: TrueNetwork, n: int, gamma: float, ratio: float, data_type: str,
                    seed: int, rep: int = 1, n_lambdas: int = 100,
                    scheme: Optional[OrdinalScheme] = None,
                    levels: int = ORDINAL_LEVELS) -> SimRecord:
    """
    Generate one dataset from the truth, estimate it and score the estimate

    Lives at module level so worker processes can pickle it. Estimation
    failures produce a record with missing metrics and converged=False.
    """
    start = time.perf_counter()
    record = SimRecord(n=int(n), gamma=float(gamma), R=float(ratio), data_type=data_type,
                       rep=int(rep), seed=int(seed), edges_true=truth.network.edge_count)
    data_seed, scheme_seed = split_seed(seed)
    try:
        data = sample_mvn(pcor_to_covariance(truth), n, data_seed)
        if data_type == "ordinal":
            scheme = scheme or make_ordinal_scheme(truth.p, scheme_seed, levels)
            corr = polychoric_matrix(discretize(data, scheme))
        else:
            corr = pearson_matrix(data)
        network, trace, path = select_path(corr, n, gamma, ratio, n_lambdas)
        result = compare_networks(truth, network)
    except (GeLassoError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.warning(f"Replication failed (n={n}, gamma={gamma}, R={ratio}, "
                       f"{data_type}, rep={rep}): {e}")
        record.elapsed_ms = (time.perf_counter() - start) * 1000.0
        return record

    record.sensitivity = result.sensitivity
    record.specificity = result.specificity
    record.weight_correlation = result.weight_correlation
    record.edges_est = network.edge_count
    record.tp, record.fp = result.counts.tp, result.counts.fp
    record.tn, record.fn = result.counts.tn, result.counts.fn
    record.converged = trace.all_converged
    record.pd_repaired = corr.repaired or any(fit.loaded for fit in path)
    record.elapsed_ms = (time.perf_counter() - start) * 1000.0
    return record


def _run_task(args) -> SimRecord:
    return run_replication(*args)


class SimulationHarness:
    """Runs every condition x replication cell of a SimConfig"""

    def __init__(self, config: SimConfig, storage: Optional[StorageManager] = None):
        self.config = config
        self.storage = storage or StorageManager()
        self.records_path = Path(config.records_path or OUTPUT_DIR / "records.csv")

    def load_truth(self) -> TrueNetwork:
        """Truth network from the configured file, or a synthetic one"""
        cfg = self.config
        if cfg.truth_path:
            truth = self.storage.read_network(cfg.truth_path)
        else:
            truth = synthetic_true_network(cfg.truth_p, cfg.truth_density,
                                           cfg.truth_seed, cfg.cutoff)
        logger.info(f"Truth network: {truth.p} nodes, {truth.network.edge_count} edges "
                    f"({truth.provenance})")
        return truth

    def _fixed_scheme(self, truth: TrueNetwork) -> Optional[OrdinalScheme]:
        if not self.config.fixed_thresholds or "ordinal" not in self.config.data_types:
            return None
        return make_ordinal_scheme(truth.p, split_seed(self.config.root_seed)[1])

    def tasks(self, truth: TrueNetwork, skip=frozenset()) -> List[tuple]:
        """Argument tuples for run_replication in output order"""
        cfg = self.config
        scheme = self._fixed_scheme(truth)
        tasks = []
        for cond in cfg.conditions():
            for rep in range(1, cfg.replications + 1):
                if (cond.n, cond.gamma, cond.ratio, cond.data_type, rep) in skip:
                    continue
                seed = derive_seed(cfg.root_seed, cond.n, cond.gamma_index,
                                   cond.ratio_index, cond.data_type, rep)
                tasks.append((truth, cond.n, cond.gamma, cond.ratio, cond.data_type,
                              seed, rep, cfg.n_lambdas, scheme))
        return tasks

    def _execute(self, tasks: List[tuple]) -> Iterator[SimRecord]:
        workers = self.config.workers
        if workers <= 1:
            for task in tasks:
                yield _run_task(task)
            return
        batch = workers * BATCH_PER_WORKER
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for start in range(0, len(tasks), batch):
                yield from executor.map(_run_task, tasks[start:start + batch])

    def run_grid(self, resume: bool = False, progress: bool = True) -> Iterator[SimRecord]:
        """
        Run the grid, appending each record to the records CSV as it arrives

        Args:
            resume: Keep an existing records file and skip cells it already holds
            progress: Show a progress bar

        Yields:
            SimRecord in deterministic condition/replication order
        """
        truth = self.load_truth()
        done = set()
        if resume:
            done = self.storage.completed_keys(self.records_path)
            logger.info(f"Resuming: {len(done)} records already in {self.records_path}")
        elif self.records_path.exists():
            logger.info(f"Overwriting {self.records_path}")
            self.records_path.unlink()

        tasks = self.tasks(truth, done)
        logger.info(f"Running {len(tasks)} replications with {self.config.workers} worker(s)")
        try:
            with tqdm(total=len(tasks), desc="Replications", unit="rep",
                      disable=not progress) as bar:
                for record in self._execute(tasks):
                    self.storage.append_records([record], self.records_path)
                    bar.update(1)
                    yield record
        except OSError as e:
            logger.error(f"Simulation aborted; rerun with resume to continue: {e}")
            raise

    def run(self, resume: bool = False, progress: bool = True) -> Path:
        """Run the whole grid and return the records path"""
        count = sum(1 for _ in self.run_grid(resume, progress))
        logger.info(f"Wrote {count} new records to {self.records_path}")
        return self.records_path


def _parse_list(raw: str, cast) -> list:
    return [cast(item.strip()) for item in raw.replace(';', ',').split(',') if item.strip()]


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


CONFIG_KEYS = {
    'grid': {
        'sample_sizes': ('sample_sizes', lambda v: _parse_list(v, int)),
        'gammas': ('gammas', lambda v: _parse_list(v, float)),
        'ratios': ('ratios', lambda v: _parse_list(v, float)),
        'data_types': ('data_types', lambda v: _parse_list(v, str)),
        'replications': ('replications', int),
        'n_lambdas': ('n_lambdas', int),
    },
    'truth': {
        'path': ('truth_path', str),
        'p': ('truth_p', int),
        'density': ('truth_density', float),
        'seed': ('truth_seed', int),
        'cutoff': ('cutoff', float),
    },
    'run': {
        'root_seed': ('root_seed', int),
        'workers': ('workers', int),
        'fixed_thresholds': ('fixed_thresholds', _parse_bool),
        'records': ('records_path', str),
        'summary_dir': ('summary_dir', str),
    },
}


def _line_of(lines: List[str], section: str, key: Optional[str] = None) -> Optional[int]:
    current = None
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith('[') and stripped.endswith(']'):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return number
            continue
        if current == section and key is not None:
            name = stripped.split('=', 1)[0].split(':', 1)[0].strip().lower()
            if name == key:
                return number
    return None


def parse_config(text: str, source: str = "config", **overrides) -> SimConfig:
    """
    Build a SimConfig from '[grid]', '[truth]' and '[run]' sections of key = value lines

    Raises:
        ConfigError: With the offending line number where one exists
    """
    lines = text.splitlines()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"expected a [section] header in {source}", e.lineno)
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError(f"cannot parse {source}", lineno)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(f"{e} in {source}", e.lineno)

    values = {}
    for section in parser.sections():
        if section not in CONFIG_KEYS:
            raise ConfigError(f"unknown section [{section}] in {source}", _line_of(lines, section))
        for key, raw in parser.items(section):
            if key not in CONFIG_KEYS[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]", _line_of(lines, section, key))
            field_name, cast = CONFIG_KEYS[section][key]
            try:
                values[field_name] = cast(raw)
            except ValueError as e:
                raise ConfigError(f"bad value for '{key}': {e}", _line_of(lines, section, key))

    env_seed = get_env_setting("GELASSO_SEED", cast=int)
    if "root_seed" not in values and env_seed is not None:
        values["root_seed"] = env_seed
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values.get('data_types', DATA_TYPES)) - set(DATA_TYPES)
    if unknown:
        raise ConfigError(f"unknown data types {sorted(unknown)}",
                          _line_of(lines, 'grid', 'data_types'))
    return SimConfig(**values)


def load_config(path: Union[str, Path], **overrides) -> SimConfig:
    """Read a simulation config file; keyword overrides win over file values"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        logger.error(f"Failed to read config {path}: {e}")
        raise
    config = parse_config(text, str(path), **overrides)
    logger.info(f"Loaded config {path}: {config.record_count()} records planned")
    return config
