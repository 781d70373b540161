"""Centralized constants for MGMC."""

from pathlib import Path

# =============================================================================
# PATHS
# =============================================================================

PROJECT_DIR = Path(__file__).parent
DATA_DIR = PROJECT_DIR / "data"
DB_PATH = DATA_DIR / "mgmc.db"

# Database connection timeout (seconds)
DB_TIMEOUT_SECONDS = 30.0

# =============================================================================
# NUMERICS
# =============================================================================

# Power iteration for the largest Laplacian eigenvalue
POWER_ITERATION_TOL = 1e-9
POWER_ITERATION_MAX_ITERS = 10_000

# Below this the graph is treated as edgeless
LAMBDA_MAX_FLOOR = 1e-12

# Default finite-difference step and tolerance for gradient checks
GRAD_CHECK_STEP = 1e-5
GRAD_CHECK_TOL = 1e-6

# Parameter container magic and format version
MODEL_MAGIC = b"MGMC1"
MODEL_FORMAT_VERSION = 1

# =============================================================================
# MODEL DEFAULTS
# =============================================================================

DEFAULT_CHEB_ORDER = 3
DEFAULT_UNROLL_STEPS = 10
DEFAULT_HIDDEN_UNITS = 32
DEFAULT_ATTENTION_WIDTH = 16
DEFAULT_GAMMA = 1.0

FUSION_MODES = ["additive", "query_key"]
FUSION_SCOPES = ["row", "global"]

# =============================================================================
# TRAINING DEFAULTS
# =============================================================================

DEFAULT_LEARNING_RATE = 0.005
DEFAULT_EPOCHS = 500
DEFAULT_PATIENCE = 30
DEFAULT_SEARCH_BUDGET = 120

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Search space bounds (inclusive)
LEARNING_RATE_RANGE = (1e-5, 0.1)
CHEB_ORDER_RANGE = (1, 20)
HIDDEN_UNITS_RANGE = (8, 512)
GAMMA_RANGE = (0.001, 1000.0)

# =============================================================================
# DATA DEFAULTS
# =============================================================================

TEST_FRACTION = 0.1
VAL_FRACTION = 0.1
MIN_STRATUM_SIZE = 3

SPLIT_TRAIN = "train"
SPLIT_VAL = "val"
SPLIT_TEST = "test"
SPLIT_UNASSIGNED = ""

AVAILABILITY_LEVELS = [1.0, 0.75, 0.5, 0.25]

# Cell strings read as missing by the CSV loader
MISSING_TOKENS = {"", "nan"}

# Default θ for numeric meta-features when the schema omits it
DEFAULT_META_THRESHOLD = 2.0

DEFAULT_KNN_NEIGHBORS = 5

# =============================================================================
# EVALUATION
# =============================================================================

DEFAULT_FOLDS = 10

VALID_METHODS = [
    "mgmc",
    "mgmc-autoregressive",
    "gmc",
    "gcn+mean",
    "gcn+knn",
    "lr+mean",
    "lr+knn",
]

METRIC_NAMES = ["accuracy", "auc", "rmse"]
