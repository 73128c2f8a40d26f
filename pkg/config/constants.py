# Project constants
PROJECT_NAME = "GeLasso"
VERSION = "1.0.0"

# File extensions
SUPPORTED_DATA_FORMATS = ['.csv']
SVG_FORMAT = '.svg'

# EBICglasso defaults
DEFAULT_GAMMA = 0.5
DEFAULT_RATIO = 0.01
DEFAULT_N_LAMBDAS = 100

# True network construction
DEFAULT_CUTOFF = 0.05
DEFAULT_P = 25
DEFAULT_DENSITY = 125 / 300
DEFAULT_POSITIVE_FRACTION = 0.5
NETWORK_EIGEN_FLOOR = 1e-6
NETWORK_SPECTRAL_TARGET = 0.45
NETWORK_BISECTION_STEPS = 60
MAX_GENERATION_RETRIES = 100
MAX_REPAIR_ROUNDS = 50

# Ordinal data
ORDINAL_LEVELS = 5
MAX_ORDINAL_LEVELS = 10

# Polychoric estimation
RHO_BOUND = 0.9999
RHO_XTOL = 1e-7
CELL_PROB_FLOOR = 1e-12
EIGEN_FLOOR = 1e-8

# Graphical lasso
GLASSO_TOL = 1e-6
GLASSO_INNER_TOL = 1e-10
GLASSO_MAX_SWEEPS = 10000
GLASSO_MAX_INNER = 10000
ZERO_SNAP = 1e-10
LOADING_EPS = 1e-8
EBIC_TIE_TOL = 1e-9

# Benchmark simulation grid
BENCHMARK_SAMPLE_SIZES = [50, 100, 250, 500, 1000, 2500]
BENCHMARK_GAMMAS = [0.0, 0.25, 0.5, 0.75, 1.0]
BENCHMARK_RATIOS = [0.001, 0.01, 0.1]
DATA_TYPES = ['normal', 'ordinal']
DEFAULT_REPLICATIONS = 10
DEFAULT_ROOT_SEED = 2016

RECORD_COLUMNS = [
    'n', 'gamma', 'R', 'data_type', 'rep', 'seed',
    'sensitivity', 'specificity', 'weight_correlation',
    'edges_true', 'edges_est', 'tp', 'fp', 'tn', 'fn',
    'converged', 'pd_repaired', 'elapsed_ms',
]
CONDITION_COLUMNS = ['n', 'gamma', 'R', 'data_type']
METRICS = ['sensitivity', 'specificity', 'weight_correlation']
FLOAT_FORMAT = '%.10g'

# Logging
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
