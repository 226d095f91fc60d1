"""Module for nested cross-validation of tree edit distance learning."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields, replace
import json
import logging
from pathlib import Path
import time
from typing import Any

from joblib import Parallel, delayed
import numpy as np
from sklearn.model_selection import StratifiedKFold

from .bedl import BedlConfig, bedl_fit
from .classifiers import error_rate, goodness_fit, goodness_predict, knn_classify, similarity
from .const import (
    BETA_SCALE_RANGE,
    DEFAULT_GRADIENT_BUDGET,
    DEFAULT_INNER_FOLDS,
    DEFAULT_OUTER_FOLDS,
    DEFAULT_OUTER_LIMIT,
    DEFAULT_SUBGRADIENT_ITERATIONS,
    GOODNESS,
    GRID_POINTS,
    KNN,
    LAMBDA_RANGE,
    METHOD_BEDL,
    METHOD_GESL,
    METHOD_NONE,
    MGLVQ,
    NEIGHBOR_RANGE,
    PROTOTYPE_RANGE,
    REFRESH_CURRENT,
)
from .costs import CostModel, ExplicitCostMatrix, cosine_init, load_word_vectors
from .error import ContractViolationError, DatasetError, TedLearnError
from .gesl import gesl_fit
from .mglvq import classify_nearest_prototype, median_glvq_fit
from .ted import ted_matrix, ted_pairwise
from .trees import LabeledDataset

_LOGGER = logging.getLogger(__name__)

CLASSIFIERS = (KNN, MGLVQ, GOODNESS)
METHODS = (METHOD_NONE, METHOD_GESL, METHOD_BEDL)

REPORT_HEADER = (
    "fold",
    "method",
    "classifier",
    "error",
    "error_std",
    "runtime",
    "runtime_std",
    "hyperparameters",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one cross-validation experiment."""

    seed: int
    method: str = METHOD_NONE
    outer_folds: int = DEFAULT_OUTER_FOLDS
    inner_folds: int = DEFAULT_INNER_FOLDS
    prototype_range: tuple[int, int] = PROTOTYPE_RANGE
    neighbor_range: tuple[int, int] = NEIGHBOR_RANGE
    lambda_range: tuple[float, float] = LAMBDA_RANGE
    beta_scale_range: tuple[float, float] = BETA_SCALE_RANGE
    grid_points: int = GRID_POINTS
    budget: int = DEFAULT_GRADIENT_BUDGET
    outer_limit: int = DEFAULT_OUTER_LIMIT
    averaged: bool = True
    refresh: str = REFRESH_CURRENT
    iterations: int = DEFAULT_SUBGRADIENT_ITERATIONS
    n_jobs: int = 1
    word_vectors: str | None = None

    def __post_init__(self) -> None:
        """Validate parameters."""
        if self.method not in METHODS:
            raise TedLearnError(f"Unknown method '{self.method}'")
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise TedLearnError("Need at least two outer and two inner folds")
        if self.grid_points < 1:
            raise TedLearnError("Need at least one grid point")

    @classmethod
    def from_file(cls, path: str | Path, **overrides: Any) -> ExperimentConfig:
        """Read a JSON config, then apply the non-None overrides."""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise TedLearnError(f"Invalid config file {path}") from err
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise TedLearnError(f"Unknown config fields: {', '.join(sorted(unknown))}")
        data.update({key: value for key, value in overrides.items() if value is not None})
        if "seed" not in data:
            raise TedLearnError("A seed is required")
        for key, value in data.items():
            if isinstance(value, list):
                data[key] = tuple(value)
        return cls(**data)

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """Return the config with the non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @property
    def prototype_grid(self) -> list[int]:
        """Return prototype counts per class to try."""
        low, high = self.prototype_range
        return list(range(low, high + 1))

    @property
    def neighbor_grid(self) -> list[int]:
        """Return neighbour counts to try."""
        low, high = self.neighbor_range
        return list(range(low, high + 1))

    @property
    def lambda_grid(self) -> list[float]:
        """Return log-spaced L1 weights to try."""
        return _log_grid(self.lambda_range, self.grid_points)

    @property
    def beta_scale_grid(self) -> list[float]:
        """Return log-spaced regularization scales to try."""
        return _log_grid(self.beta_scale_range, self.grid_points)


def _log_grid(bounds: tuple[float, float], points: int) -> list[float]:
    low, high = bounds
    return np.logspace(np.log10(low), np.log10(high), points).tolist()


@dataclass
class FoldReport:
    """Test errors, metric learning runtime and hyperparameters of one outer fold."""

    fold: int
    method: str
    errors: dict[str, float]
    runtime: float
    hyperparameters: dict[str, float]
    train_index: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)
    model: CostModel | None = field(default=None, repr=False)


def stratified_splits(
    labels: np.ndarray, folds: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Return shuffled stratified train and test index pairs."""
    counts = np.unique(labels, return_counts=True)[1]
    if counts.min() < folds:
        raise DatasetError(
            f"Smallest class has {counts.min()} members, too few for {folds} stratified folds"
        )
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(splitter.split(np.zeros(len(labels)), labels))


def _mglvq_error(
    distances: np.ndarray,
    labels: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
    k: int,
    seed: int,
) -> float:
    model = median_glvq_fit(distances[np.ix_(train, train)], labels[train], k, seed=seed)
    predicted = classify_nearest_prototype(
        distances[np.ix_(test, train[model.indices])], model
    )
    return error_rate(predicted, labels[test])


def _knn_error(
    distances: np.ndarray, labels: np.ndarray, train: np.ndarray, test: np.ndarray, k: int
) -> float:
    predicted = knn_classify(distances[np.ix_(test, train)], labels[train], min(k, len(train)))
    return error_rate(predicted, labels[test])


def _goodness_error(
    distances: np.ndarray,
    labels: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
    lam: float,
    iterations: int,
) -> float:
    model = goodness_fit(
        distances[np.ix_(train, train)], labels[train], lam, iterations=iterations
    )
    predicted = goodness_predict(model, similarity(distances[np.ix_(test, train)]))
    return error_rate(predicted, labels[test])


def _select(grid: list[Any], score: Any) -> Any:
    """Return the grid value with the lowest score, earlier values on ties."""
    scores = [score(value) for value in grid]
    return grid[int(np.argmin(scores))]


def _select_classifiers(
    distances: np.ndarray,
    labels: np.ndarray,
    config: ExperimentConfig,
    inner: list[tuple[np.ndarray, np.ndarray]],
    seed: int,
) -> dict[str, float]:
    """Return K, k and lambda with the lowest inner cross-validation errors."""

    def mean(error: Any) -> float:
        return float(np.mean([error(tr, va) for tr, va in inner]))

    return {
        "K": _select(
            config.prototype_grid,
            lambda k: mean(lambda tr, va: _mglvq_error(distances, labels, tr, va, k, seed)),
        ),
        "k": _select(
            config.neighbor_grid,
            lambda k: mean(lambda tr, va: _knn_error(distances, labels, tr, va, k)),
        ),
        "lambda": _select(
            config.lambda_grid,
            lambda lam: mean(
                lambda tr, va: _goodness_error(distances, labels, tr, va, lam, config.iterations)
            ),
        ),
    }


def _learn(
    dataset: LabeledDataset, config: ExperimentConfig, k: int, beta_scale: float, seed: int
) -> CostModel:
    """Run the configured metric learning method on a training set."""
    beta = beta_scale * 2.0 * k * len(dataset)
    if config.method == METHOD_BEDL:
        bedl_config = BedlConfig(
            prototypes=k,
            beta=beta,
            budget=config.budget,
            outer_limit=config.outer_limit,
            averaged=config.averaged,
            refresh=config.refresh,
        )
        init = None
        if config.word_vectors:
            base, _ = load_word_vectors(config.word_vectors, dataset.alphabet)
            init = cosine_init(dataset.alphabet, base)
        return bedl_fit(dataset, bedl_config, seed=seed, init=init).model
    return gesl_fit(dataset, k, beta, iterations=config.iterations).costs


def _select_beta_scale(
    dataset: LabeledDataset,
    config: ExperimentConfig,
    inner: list[tuple[np.ndarray, np.ndarray]],
    chosen: dict[str, float],
    seed: int,
) -> float:
    """Return the regularization scale whose learned metric validates best.

    BEDL is judged by median GLVQ error, GESL by goodness error.
    """
    grid = config.beta_scale_grid
    if len(grid) == 1:
        return grid[0]
    k = int(chosen["K"])

    def score(scale: float) -> float:
        errors = []
        for tr, va in inner:
            train = dataset.subset(tr)
            model = _learn(train, config, k, scale, seed)
            both = np.concatenate([tr, va])
            local = ted_pairwise([dataset.trees[i] for i in both], model)
            local_labels = dataset.labels[both]
            t_idx = np.arange(len(tr))
            v_idx = np.arange(len(tr), len(both))
            if config.method == METHOD_BEDL:
                errors.append(_mglvq_error(local, local_labels, t_idx, v_idx, k, seed))
            else:
                errors.append(
                    _goodness_error(
                        local, local_labels, t_idx, v_idx, chosen["lambda"], config.iterations
                    )
                )
        return float(np.mean(errors))

    return _select(grid, score)


def _run_fold(
    fold: int,
    train: np.ndarray,
    test: np.ndarray,
    dataset: LabeledDataset,
    initial: np.ndarray,
    config: ExperimentConfig,
) -> FoldReport:
    """Select hyperparameters, learn the metric and test all classifiers on one outer fold."""
    if np.intersect1d(train, test).size:
        raise ContractViolationError(f"Fold {fold} shares trees between training and test")
    seed = config.seed + fold
    labels = dataset.labels
    train_labels = labels[train]
    inner = stratified_splits(train_labels, config.inner_folds, seed)
    train_distances = initial[np.ix_(train, train)]
    chosen = _select_classifiers(train_distances, train_labels, config, inner, seed)

    runtime = 0.0
    model: CostModel | None = None
    distances = initial
    if config.method != METHOD_NONE:
        train_set = dataset.subset(train)
        scale = _select_beta_scale(train_set, config, inner, chosen, seed)
        chosen["beta_scale"] = scale
        start = time.perf_counter()
        model = _learn(train_set, config, int(chosen["K"]), scale, seed)
        runtime = time.perf_counter() - start

        order = np.concatenate([train, test])
        trees = [dataset.trees[i] for i in order]
        size = len(train)
        # Test-to-test distances stay unused
        distances = np.zeros((len(dataset), len(dataset)))
        distances[np.ix_(train, train)] = ted_pairwise(trees[:size], model)
        distances[np.ix_(test, train)] = ted_matrix(trees[size:], trees[:size], model)
        tuned = _select_classifiers(
            distances[np.ix_(train, train)], train_labels, config, inner, seed
        )
        chosen["k"], chosen["lambda"] = tuned["k"], tuned["lambda"]

    errors = {
        KNN: _knn_error(distances, labels, train, test, int(chosen["k"])),
        MGLVQ: _mglvq_error(distances, labels, train, test, int(chosen["K"]), seed),
        GOODNESS: _goodness_error(
            distances, labels, train, test, chosen["lambda"], config.iterations
        ),
    }
    _LOGGER.debug("Fold %d: %s", fold, errors)
    return FoldReport(fold, config.method, errors, runtime, chosen, train, test, model)


def run_experiment(config: ExperimentConfig, dataset: LabeledDataset) -> list[FoldReport]:
    """Run stratified outer folds with nested hyperparameter selection."""
    outer = stratified_splits(dataset.labels, config.outer_folds, config.seed)
    smallest = min(
        np.unique(dataset.labels[train], return_counts=True)[1].min() for train, _ in outer
    )
    if smallest < config.inner_folds:
        raise DatasetError(
            f"Outer training folds keep {smallest} members of a class, "
            f"too few for {config.inner_folds} inner folds"
        )

    initial = ted_pairwise(dataset.trees, ExplicitCostMatrix.unit(dataset.alphabet))
    _LOGGER.info(
        "Running %d folds of method '%s' on %d trees",
        config.outer_folds,
        config.method,
        len(dataset),
    )
    reports = Parallel(n_jobs=config.n_jobs)(
        delayed(_run_fold)(fold, train, test, dataset, initial, config)
        for fold, (train, test) in enumerate(outer)
    )
    return list(reports)


def summarize(reports: list[FoldReport]) -> dict[str, tuple[float, float]]:
    """Return mean and standard deviation of the test error per classifier."""
    return {
        name: (
            float(np.mean([r.errors[name] for r in reports])),
            float(np.std([r.errors[name] for r in reports])),
        )
        for name in CLASSIFIERS
    }


def write_report(
    reports: list[FoldReport], path: str | Path, *, include_runtime: bool = True
) -> None:
    """Write one row per fold and classifier, then mean and deviation rows per classifier."""

    def fmt(value: float) -> str:
        return f"{value:.6f}"

    runtimes = [r.runtime for r in reports]
    with Path(path).open("w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(REPORT_HEADER)
        for report in reports:
            params = json.dumps(report.hyperparameters, sort_keys=True)
            for name in CLASSIFIERS:
                writer.writerow(
                    [
                        report.fold,
                        report.method,
                        name,
                        fmt(report.errors[name]),
                        "",
                        fmt(report.runtime) if include_runtime else "",
                        "",
                        params,
                    ]
                )
        method = reports[0].method if reports else ""
        for name, (mean, std) in summarize(reports).items():
            writer.writerow(
                [
                    "summary",
                    method,
                    name,
                    fmt(mean),
                    fmt(std),
                    fmt(float(np.mean(runtimes))) if include_runtime else "",
                    fmt(float(np.std(runtimes))) if include_runtime else "",
                    "",
                ]
            )
