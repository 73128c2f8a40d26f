import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config.constants import (  # noqa: E402
    DEFAULT_CUTOFF, DEFAULT_DENSITY, DEFAULT_GAMMA, DEFAULT_N_LAMBDAS, DEFAULT_P,
    DEFAULT_RATIO, MAX_ORDINAL_LEVELS, METRICS, ORDINAL_LEVELS, PROJECT_NAME, VERSION,
)
from config.settings import OUTPUT_DIR, PROJECT_ROOT, get_env_setting, setup_logging  # noqa: E402
from src.core.correlation import pearson_matrix, polychoric_matrix  # noqa: E402
from src.core.generation import (  # noqa: E402
    discretize, make_ordinal_scheme, pcor_to_covariance, sample_mvn,
    synthetic_true_network, truth_from_data,
)
from src.core.metrics import compare_networks  # noqa: E402
from src.core.model_selection import select_network  # noqa: E402
from src.core.rendering import BoxplotRenderer  # noqa: E402
from src.core.validation import DatasetValidator  # noqa: E402
from src.models.errors import GeLassoError  # noqa: E402
from src.services.simulation import SimulationHarness, load_config, split_seed  # noqa: E402
from src.services.storage import StorageManager  # noqa: E402
from src.services.summary import SummaryBuilder  # noqa: E402

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = PROJECT_ROOT / "config" / "simulation.ini"


class GeLassoCLI:
    """Command line interface for GeLasso"""

    def __init__(self, output_dir: Optional[Path] = None):
        self.output_dir = Path(output_dir or OUTPUT_DIR)
        self.storage = StorageManager(output_dir=self.output_dir)

    def estimate(self, data_path: str, gamma: float = DEFAULT_GAMMA, ratio: float = DEFAULT_RATIO,
                 n_lambdas: int = DEFAULT_N_LAMBDAS, data_type: str = "auto",
                 max_levels: int = MAX_ORDINAL_LEVELS, network_path: Optional[str] = None,
                 trace_path: Optional[str] = None, truth_path: Optional[str] = None,
                 strict: bool = False) -> Path:
        """
        Estimate an EBIC-selected network from a data CSV

        Args:
            data_path: CSV with a header row of variable names
            gamma: EBIC hyperparameter
            ratio: lambda_min / lambda_max
            n_lambdas: Number of penalties on the path
            data_type: "auto", "continuous" or "ordinal"
            max_levels: Largest level count treated as ordinal by auto-detection
            network_path: Where to write the network matrix
            trace_path: Where to write the EBIC trace
            truth_path: Optional true network to score the estimate against
            strict: Fail when any glasso fit on the path does not converge

        Returns:
            Path to the network file
        """
        try:
            frame = self.storage.read_dataset(data_path)
            kind = None if data_type == "auto" else data_type
            dataset = DatasetValidator(max_levels).validate_frame(frame, kind, source=data_path)

            if dataset.is_ordinal:
                logger.info("Using polychoric correlations")
                corr = polychoric_matrix(dataset)
            else:
                logger.info("Using Pearson correlations")
                corr = pearson_matrix(dataset)

            network, trace = select_network(corr, dataset.n, gamma, ratio, n_lambdas,
                                            names=dataset.names, strict=strict)
            logger.info(f"Selected lambda {trace.selected_lambda:.4g}: "
                        f"{network.edge_count} of {network.n_pairs} edges")

            stem = Path(data_path).stem
            network_path = Path(network_path or self.storage.output_path(f"{stem}_network.csv"))
            trace_path = Path(trace_path or self.storage.output_path(f"{stem}_trace.csv"))
            self.storage.write_network(network, network_path, fmt="matrix")
            self.storage.write_trace(trace, trace_path)

            if truth_path:
                result = compare_networks(self.storage.read_network(truth_path), network)
                for metric, value in result.to_dict().items():
                    print(f"{metric}: {value}")
            return network_path
        except Exception as e:
            logger.error(f"Estimation failed: {e}")
            raise

    def generate(self, p: int = DEFAULT_P, density: float = DEFAULT_DENSITY, seed: int = 1,
                 cutoff: float = DEFAULT_CUTOFF, n: int = 500, ordinal: bool = False,
                 levels: int = ORDINAL_LEVELS, truth_path: Optional[str] = None,
                 truth_data_path: Optional[str] = None, prefix: str = "generated") -> List[Path]:
        """
        Write a true network and a dataset sampled from it

        The truth is read from truth_path, derived from truth_data_path, or
        drawn synthetically from (p, density, seed). Data and ordinal
        thresholds use seeds split off the same --seed.

        Returns:
            Paths of the truth file and the dataset file
        """
        try:
            if truth_path:
                truth = self.storage.read_network(truth_path)
            elif truth_data_path:
                frame = self.storage.read_dataset(truth_data_path)
                dataset = DatasetValidator().validate_frame(frame, source=truth_data_path)
                truth = truth_from_data(dataset, cutoff, provenance=truth_data_path)
            else:
                truth = synthetic_true_network(p, density, seed, cutoff)
            logger.info(f"Truth network has {truth.network.edge_count} edges on {truth.p} nodes "
                        f"(density {truth.network.density:.3f})")

            data_seed, scheme_seed = split_seed(seed)
            dataset = sample_mvn(pcor_to_covariance(truth), n, data_seed,
                                 names=truth.network.names or None)
            if ordinal:
                dataset = discretize(dataset, make_ordinal_scheme(truth.p, scheme_seed, levels))

            truth_out = self.storage.write_network(truth, self.storage.output_path(f"{prefix}_truth.csv"),
                                                   fmt="edges")
            data_out = self.storage.write_dataset(dataset, self.storage.output_path(f"{prefix}_data.csv"))
            return [truth_out, data_out]
        except Exception as e:
            logger.error(f"Generation failed: {e}")
            raise

    def simulate(self, config_path: Optional[str] = None, resume: bool = False,
                 workers: Optional[int] = None, records_path: Optional[str] = None,
                 root_seed: Optional[int] = None, replications: Optional[int] = None,
                 progress: bool = True) -> Path:
        """Run the factorial simulation described by a config file"""
        try:
            if workers is None:
                workers = get_env_setting("GELASSO_WORKERS", cast=int)
            config = load_config(
                config_path or DEFAULT_CONFIG,
                workers=workers, root_seed=root_seed, replications=replications,
                records_path=records_path,
            )
            if config.records_path is None:
                config.records_path = str(self.storage.output_path("records.csv"))
            logger.info(f"Planned {config.record_count()} records")
            return SimulationHarness(config, self.storage).run(resume=resume, progress=progress)
        except Exception as e:
            logger.error(f"Simulation failed: {e}")
            raise

    def summarize(self, records_path: str, output_dir: Optional[str] = None) -> List[Path]:
        """Write summary.csv and one boxplot SVG per metric"""
        try:
            out = Path(output_dir) if output_dir else self.output_dir
            summaries, table = SummaryBuilder().summarize(self.storage.read_records(records_path))
            written = [self.storage.write_summary(table, out / "summary.csv")]
            written += BoxplotRenderer(out).render_all(summaries, METRICS)
            return written
        except Exception as e:
            logger.error(f"Summary failed: {e}")
            raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gelasso",
        description="GeLasso - EBIC graphical lasso networks for normal and ordinal data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s estimate data.csv
  %(prog)s estimate items.csv --data-type ordinal --gamma 0.25
  %(prog)s generate --p 25 --density 0.4167 --seed 1 --n 500 --ordinal
  %(prog)s simulate --config config/simulation.ini --workers 4
  %(prog)s simulate --resume
  %(prog)s summarize data/output/records.csv

Exit codes: 0 success, 1 input error, 2 numerical failure
        """
    )
    parser.add_argument("--version", action="version", version=f"{PROJECT_NAME} {VERSION}")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only log errors")
    parser.add_argument("--output-dir", "-o", type=str,
                        help=f"Directory for output files (default: {OUTPUT_DIR})")
    sub = parser.add_subparsers(dest="command")
    defaults = argparse.ArgumentDefaultsHelpFormatter

    est = sub.add_parser("estimate", help="Estimate a network from a data CSV",
                         formatter_class=defaults)
    est.add_argument("data", help="Data CSV with a header row")
    est.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="EBIC hyperparameter")
    est.add_argument("--ratio", "-R", type=float, default=DEFAULT_RATIO,
                     help="lambda_min / lambda_max")
    est.add_argument("--n-lambdas", "-m", type=int, default=DEFAULT_N_LAMBDAS,
                     help="Number of penalty values")
    est.add_argument("--data-type", choices=["auto", "continuous", "ordinal"], default="auto",
                     help="Correlation type; auto treats integer data with few levels as ordinal")
    est.add_argument("--max-levels", type=int, default=MAX_ORDINAL_LEVELS,
                     help="Most distinct values per column for ordinal auto-detection")
    est.add_argument("--network", help="Network matrix output path")
    est.add_argument("--trace", help="EBIC trace output path")
    est.add_argument("--truth", help="True network to score the estimate against")
    est.add_argument("--strict", action="store_true",
                     help="Exit with an error if any glasso fit does not converge")

    gen = sub.add_parser("generate", help="Generate a true network and data from it",
                         formatter_class=defaults)
    gen.add_argument("--p", type=int, default=DEFAULT_P, help="Number of nodes")
    gen.add_argument("--density", type=float, default=round(DEFAULT_DENSITY, 4),
                     help="Fraction of node pairs connected")
    gen.add_argument("--seed", type=int, default=1, help="Random seed")
    gen.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF,
                     help="Smallest absolute edge weight kept")
    gen.add_argument("--n", type=int, default=500, help="Rows of data to sample")
    gen.add_argument("--ordinal", action="store_true", help="Discretize the data")
    gen.add_argument("--levels", type=int, default=ORDINAL_LEVELS, help="Ordinal levels")
    source = gen.add_mutually_exclusive_group()
    source.add_argument("--truth", help="Use this network file as the truth")
    source.add_argument("--truth-from-data", help="Threshold the sample network of this data CSV")
    gen.add_argument("--prefix", default="generated", help="Output file name prefix")

    sim = sub.add_parser("simulate", help="Run the factorial simulation",
                         formatter_class=defaults)
    sim.add_argument("--config", "-c", default=str(DEFAULT_CONFIG), help="Simulation config file")
    sim.add_argument("--resume", action="store_true", help="Continue a partial records CSV")
    sim.add_argument("--workers", "-w", type=int, default=None,
                     help="Worker processes (default: $GELASSO_WORKERS, then the config)")
    sim.add_argument("--output", help="Records CSV path")
    sim.add_argument("--seed", type=int, default=None, help="Root seed override")
    sim.add_argument("--reps", type=int, default=None, help="Replications override")
    sim.add_argument("--no-progress", action="store_true", help="Hide the progress bar")

    summ = sub.add_parser("summarize", help="Boxplot summary of a records CSV",
                          formatter_class=defaults)
    summ.add_argument("records", help="Records CSV from simulate")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.quiet:
        setup_logging("ERROR")
    elif args.verbose:
        setup_logging("DEBUG")
    else:
        setup_logging()

    if args.command is None:
        parser.print_help()
        return 0

    cli = GeLassoCLI(args.output_dir)
    try:
        if args.command == "estimate":
            cli.estimate(args.data, args.gamma, args.ratio, args.n_lambdas, args.data_type,
                         args.max_levels, args.network, args.trace, args.truth, args.strict)
        elif args.command == "generate":
            cli.generate(args.p, args.density, args.seed, args.cutoff, args.n, args.ordinal,
                         args.levels, args.truth, args.truth_from_data, args.prefix)
        elif args.command == "simulate":
            cli.simulate(args.config, args.resume, args.workers, args.output, args.seed,
                         args.reps, progress=not args.no_progress)
        elif args.command == "summarize":
            cli.summarize(args.records, args.output_dir)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(1)
    except GeLassoError as e:
        sys.exit(e.exit_code)
    except OSError:
        sys.exit(1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
