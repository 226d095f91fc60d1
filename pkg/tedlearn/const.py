"""Constants for tree edit distance learning."""

from typing import Final

GAP: Final = "-"

# Co-optimality tolerance on costs
COOPT_TOL: Final = 1e-9
# Norms below this are treated as coincident points
NORM_EPS: Final = 1e-12
# Eigenvalue floor for the log-det regularizer
EIG_FLOOR: Final = 1e-12
# Minimum L improvement accepted by a median GLVQ M-step
MGLVQ_MIN_GAIN: Final = 1e-12
# Metric phases improving less than this end the outer loop
BEDL_MIN_GAIN: Final = 1e-9

BRUTE_FORCE_MAX_NODES: Final = 14
ENUMERATE_MAX_NODES: Final = 12

COSINE_GAP_COST: Final = 0.5

DEFAULT_GRADIENT_BUDGET: Final = 200
DEFAULT_OUTER_LIMIT: Final = 10
DEFAULT_SUBGRADIENT_ITERATIONS: Final = 2000
DEFAULT_GESL_STEP: Final = 0.1
DEFAULT_GOODNESS_STEP: Final = 0.1
DEFAULT_VARIANCE: Final = 0.95

DEFAULT_OUTER_FOLDS: Final = 20
DEFAULT_INNER_FOLDS: Final = 5
PROTOTYPE_RANGE: Final = (1, 15)
NEIGHBOR_RANGE: Final = (1, 15)
LAMBDA_RANGE: Final = (1e-5, 10.0)
BETA_SCALE_RANGE: Final = (1e-6, 1e-2)
GRID_POINTS: Final = 5

METHOD_NONE: Final = "none"
METHOD_GESL: Final = "gesl"
METHOD_BEDL: Final = "bedl"

KNN: Final = "knn"
MGLVQ: Final = "mglvq"
GOODNESS: Final = "goodness"

REFRESH_CURRENT: Final = "current"
REFRESH_INITIAL: Final = "initial"

STRINGS_ALPHABET: Final = ("a", "b", "c", "d")
STRINGS_PER_CLASS: Final = 100
STRINGS_LENGTH: Final = 12
