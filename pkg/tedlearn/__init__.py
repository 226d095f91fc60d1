"""A python library for learning tree edit distance costs from labeled trees."""

# ruff: noqa: F401

from .bedl import BedlConfig, BedlResult, bedl_fit
from .classifiers import (
    GoodnessModel,
    goodness_fit,
    goodness_predict,
    knn_classify,
    similarity,
)
from .coopt import ScriptSummary, coopt_average, enumerate_coopt, single_backtrace
from .costs import (
    CostModel,
    EmbeddingCostModel,
    ExplicitCostMatrix,
    TransformedCosineCostModel,
    simplex_init,
    validate_pseudometric,
)
from .datasets import generate_strings, generate_synthetic_trees
from .error import (
    ContractViolationError,
    CostModelError,
    DatasetError,
    EnumerationLimitError,
    NumericalError,
    TedLearnError,
    TreeParseError,
)
from .experiment import ExperimentConfig, FoldReport, run_experiment
from .gesl import GeslResult, gesl_fit
from .mglvq import PrototypeModel, classify_nearest_prototype, median_glvq_fit
from .pseudo import PairContext, pseudo_distance, pseudo_distance_grad
from .ted import DistanceResult, brute_force_ted, ted, ted_matrix, ted_pairwise
from .trees import Alphabet, LabeledDataset, Tree, parse_bracket, serialize_bracket

__version__ = "0.1.0"
