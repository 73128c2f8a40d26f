import logging
import re
from pathlib import Path
from typing import Iterable, List, Optional, Set, Tuple, Union

import numpy as np
import pandas as pd

from config.constants import FLOAT_FORMAT, RECORD_COLUMNS, SUPPORTED_DATA_FORMATS
from config.settings import INPUT_DIR, OUTPUT_DIR
from src.models.errors import EmptyInput, InputError
from src.models.network import Dataset, EbicTrace, PcorNetwork, TrueNetwork
from src.models.simulation import SimRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
_P_HEADER = re.compile(r"#\s*p\s*=\s*(\d+)")


class StorageManager:
    """Reads and writes datasets, networks, EBIC traces and simulation records"""

    def __init__(self,
                 input_dir: Optional[Path] = None,
                 output_dir: Optional[Path] = None):
        """
        Initialize storage manager

        Args:
            input_dir: Where bare file names are looked up when not found as given
            output_dir: Default directory for results
        """
        self.input_dir = Path(input_dir or INPUT_DIR)
        self.output_dir = Path(output_dir or OUTPUT_DIR)

        self.input_dir.mkdir(parents=True, exist_ok=True)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def output_path(self, name: str) -> Path:
        """Default location for a result file"""
        return self.output_dir / name

    def resolve_input(self, file_path: PathLike) -> Path:
        """The path as given, or the same relative path under input_dir if only that exists"""
        path = Path(file_path)
        if not path.exists() and not path.is_absolute():
            candidate = self.input_dir / path
            if candidate.exists():
                return candidate
        return path

    def _existing(self, file_path: PathLike) -> Path:
        path = self.resolve_input(file_path)
        if not path.exists():
            raise InputError(f"File not found: {path}")
        if path.suffix.lower() not in SUPPORTED_DATA_FORMATS:
            logger.warning(f"Unexpected file extension for {path}; reading as CSV")
        if path.stat().st_size == 0:
            raise EmptyInput(f"File is empty: {path}")
        return path

    @staticmethod
    def _prepare(file_path: PathLike) -> Path:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def read_dataset(self, file_path: PathLike) -> pd.DataFrame:
        """
        Read a dataset CSV (header row of variable names)

        Raises:
            EmptyInput: If the file is empty or has no data rows
            InputError: If the file is missing or unparseable
        """
        path = self._existing(file_path)
        try:
            frame = pd.read_csv(path)
        except pd.errors.EmptyDataError:
            raise EmptyInput(f"File is empty: {path}")
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise InputError(f"Could not parse {path}: {e}")
        if frame.empty:
            raise EmptyInput(f"No data rows in {path}")
        logger.info(f"Loaded {frame.shape[0]} rows x {frame.shape[1]} columns from {path}")
        return frame

    def write_dataset(self, dataset: Dataset, file_path: PathLike) -> Path:
        path = self._prepare(file_path)
        dataset.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {dataset.kind} dataset ({dataset.n} x {dataset.p}) to {path}")
        return path

    def read_network(self, file_path: PathLike) -> TrueNetwork:
        """
        Read a network from an edge list (with '# p=<count>' header) or a full matrix

        Edge lists hold 1-based `node_i,node_j,weight` rows. Anything else must be
        a square matrix, optionally with a header row of node names.
        """
        path = self._existing(file_path)
        with open(path, 'r', encoding='utf-8') as f:
            lines = [line.strip() for line in f if line.strip()]
        header = next((m for m in map(_P_HEADER.match, lines) if m), None)
        body = [line for line in lines if not line.startswith('#')]
        if not body:
            raise EmptyInput(f"No network entries in {path}")

        try:
            if header is not None:
                network = self._parse_edge_list(body, int(header.group(1)))
            else:
                network = self._parse_matrix(body)
        except ValueError as e:
            raise InputError(f"Malformed network file {path}: {e}")
        logger.info(f"Loaded network with {network.p} nodes and {network.edge_count} edges from {path}")
        return TrueNetwork(network, provenance=str(path))

    @staticmethod
    def _parse_edge_list(rows: List[str], p: int) -> PcorNetwork:
        weights = np.zeros((p, p))
        for row in rows:
            fields = [x.strip() for x in row.split(',')]
            if fields[:2] == ['node_i', 'node_j']:
                continue
            if len(fields) != 3:
                raise ValueError(f"expected node_i,node_j,weight but got '{row}'")
            i, j, w = int(fields[0]) - 1, int(fields[1]) - 1, float(fields[2])
            if not (0 <= i < p and 0 <= j < p) or i == j:
                raise ValueError(f"invalid edge ({i + 1}, {j + 1}) for p={p}")
            weights[i, j] = weights[j, i] = w
        return PcorNetwork(weights)

    @staticmethod
    def _parse_matrix(rows: List[str]) -> PcorNetwork:
        cells = [[x.strip() for x in row.split(',')] for row in rows]
        names: List[str] = []
        try:
            [float(x) for x in cells[0]]
        except ValueError:
            names = cells[0]
            cells = cells[1:]
        values = np.array([[float(x) for x in row] for row in cells])
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"matrix must be square, got shape {values.shape}")
        np.fill_diagonal(values, 0.0)
        return PcorNetwork(values, names=names)

    def write_network(self, network: Union[PcorNetwork, TrueNetwork], file_path: PathLike,
                      fmt: str = "matrix") -> Path:
        """Write a network as a named matrix CSV or as a '# p=' edge list"""
        if isinstance(network, TrueNetwork):
            network = network.network
        path = self._prepare(file_path)
        if fmt == "edges":
            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(f"# p={network.p}\n")
                network.edge_list().to_csv(f, index=False, float_format=FLOAT_FORMAT)
        else:
            frame = pd.DataFrame(network.weights, columns=network.names)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote network ({network.edge_count} edges) to {path}")
        return path

    def write_trace(self, trace: EbicTrace, file_path: PathLike) -> Path:
        path = self._prepare(file_path)
        trace.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote EBIC trace ({len(trace)} lambdas) to {path}")
        return path

    def append_records(self, records: Iterable[SimRecord], file_path: PathLike) -> int:
        """Append records to the CSV, writing the header when the file is new"""
        rows = [record.to_dict() for record in records]
        if not rows:
            return 0
        path = self._prepare(file_path)
        new_file = not path.exists() or path.stat().st_size == 0
        frame = pd.DataFrame(rows, columns=RECORD_COLUMNS)
        frame.to_csv(path, mode='a', header=new_file, index=False, float_format=FLOAT_FORMAT)
        return len(rows)

    def completed_keys(self, file_path: PathLike) -> Set[Tuple]:
        """
        Keys (n, gamma, R, data_type, rep) already present in a records CSV

        A trailing partial line left by an interrupted run is cut off first.
        """
        path = Path(file_path)
        if not path.exists() or path.stat().st_size == 0:
            return set()
        raw = path.read_bytes()
        if not raw.endswith(b'\n'):
            cut = raw.rfind(b'\n') + 1
            logger.warning(f"Dropping incomplete last line of {path}")
            path.write_bytes(raw[:cut])
        frame = self.read_records(path)
        return {(int(r.n), float(r.gamma), float(r.R), str(r.data_type), int(r.rep))
                for r in frame.itertuples(index=False)}

    def read_records(self, file_path: PathLike) -> pd.DataFrame:
        """Read a records CSV and check its column layout"""
        path = self._existing(file_path)
        try:
            frame = pd.read_csv(path)
        except pd.errors.EmptyDataError:
            raise EmptyInput(f"No records in {path}")
        missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
        if missing:
            raise InputError(f"Records file {path} lacks columns {missing}")
        return frame

    def write_summary(self, frame: pd.DataFrame, file_path: PathLike) -> Path:
        path = self._prepare(file_path)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote summary ({len(frame)} rows) to {path}")
        return path
