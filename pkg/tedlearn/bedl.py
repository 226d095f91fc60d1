"""Module for learning label embeddings that shape the tree edit distance.

The outer loop alternates between median GLVQ prototype selection and a
metric phase, which minimizes the GLVQ loss over pseudo edit distances
to the closest correct and wrong prototype of every training tree.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
import logging
from typing import Any, NamedTuple

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .const import (
    BEDL_MIN_GAIN,
    DEFAULT_GRADIENT_BUDGET,
    DEFAULT_OUTER_LIMIT,
    EIG_FLOOR,
    REFRESH_CURRENT,
    REFRESH_INITIAL,
)
from .costs import CostModel, EmbeddingCostModel, TransformedCosineCostModel, simplex_init
from .error import CostModelError, DatasetError, NumericalError
from .mglvq import PrototypeModel, glvq_loss, glvq_state, median_glvq_fit
from .pseudo import PairContext
from .ted import ted_pairwise
from .trees import LabeledDataset, Tree

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class BedlConfig:
    """Parameters of embedding edit distance learning.

    A gradient budget of 0 skips the metric phase entirely.
    """

    prototypes: int = 1
    beta: float = 0.0
    budget: int = DEFAULT_GRADIENT_BUDGET
    outer_limit: int = DEFAULT_OUTER_LIMIT
    averaged: bool = True
    refresh: str = REFRESH_CURRENT

    def __post_init__(self) -> None:
        """Validate parameters."""
        if self.beta < 0:
            raise CostModelError("beta must be non-negative")
        if self.budget < 0 or self.outer_limit < 1 or self.prototypes < 1:
            raise CostModelError("Budgets and prototype counts must be positive")
        if self.refresh not in (REFRESH_CURRENT, REFRESH_INITIAL):
            raise CostModelError(f"Unknown refresh policy '{self.refresh}'")


@dataclass(frozen=True)
class TrainingPairSet:
    """Pair contexts of every example to its closest correct and wrong prototype.

    Label pair frequencies of all contexts are concatenated so that loss
    and gradient need a single cost model call.
    """

    plus: tuple[PairContext, ...]
    minus: tuple[PairContext, ...]
    rows: np.ndarray = field(init=False, repr=False)
    cols: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    segments: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Concatenate label pair frequencies, segment 2i is d+ and 2i + 1 is d- of example i."""
        if len(self.plus) != len(self.minus):
            raise DatasetError("Need one correct and one wrong context per example")
        contexts = [ctx for pair in zip(self.plus, self.minus, strict=True) for ctx in pair]
        object.__setattr__(self, "rows", np.concatenate([c.rows for c in contexts]))
        object.__setattr__(self, "cols", np.concatenate([c.cols for c in contexts]))
        object.__setattr__(self, "weights", np.concatenate([c.weights for c in contexts]))
        object.__setattr__(
            self,
            "segments",
            np.repeat(np.arange(len(contexts)), [len(c.weights) for c in contexts]),
        )

    def __len__(self) -> int:
        """Return number of examples."""
        return len(self.plus)

    @classmethod
    def build(
        cls,
        trees: Sequence[Tree],
        distances: np.ndarray,
        labels: np.ndarray,
        prototypes: PrototypeModel,
        reference: CostModel,
        *,
        averaged: bool = True,
    ) -> TrainingPairSet:
        """Return contexts to the closest prototypes, frequencies taken at `reference`."""
        state = glvq_state(distances[:, prototypes.indices], labels, prototypes)
        plus = []
        minus = []
        for i, x in enumerate(trees):
            w_plus = trees[prototypes.indices[state.plus[i]]]
            w_minus = trees[prototypes.indices[state.minus[i]]]
            plus.append(PairContext.build(x, w_plus, reference, averaged=averaged))
            minus.append(PairContext.build(x, w_minus, reference, averaged=averaged))
        return cls(tuple(plus), tuple(minus))

    def distances(self, model: CostModel) -> tuple[np.ndarray, np.ndarray]:
        """Return the pseudo distances d+ and d- of every example."""
        values = self.weights * model.pair_costs(self.rows, self.cols)
        both = np.bincount(self.segments, values, minlength=2 * len(self))
        return both[0::2], both[1::2]


class MetricGradient(NamedTuple):
    """GLVQ loss over pseudo distances with its parameter gradient."""

    loss: float
    gradient: np.ndarray
    degenerate: int


def glvq_metric_loss_and_grad(pairs: TrainingPairSet, model: CostModel) -> MetricGradient:
    """Return sum log(4 + mu) over pseudo distances and its gradient.

    Examples with d+ = d- = 0 contribute log 4 and no gradient.
    """
    d_plus, d_minus = pairs.distances(model)
    total = d_plus + d_minus
    ok = total > 0.0
    degenerate = int(np.count_nonzero(~ok))
    if degenerate:
        _LOGGER.warning(
            "Skipping %d examples at pseudo distance 0 from both prototypes", degenerate
        )
    mu = np.divide(d_plus - d_minus, total, out=np.zeros_like(total), where=ok)
    loss = float(np.sum(np.log(4.0 + mu)))

    # d mu / d d+ = 2 d- / (d+ + d-)^2 and d mu / d d- = -2 d+ / (d+ + d-)^2
    coef = np.divide(2.0 / (4.0 + mu), total**2, out=np.zeros_like(total), where=ok)
    scale = np.empty(2 * len(pairs))
    scale[0::2] = coef * d_minus
    scale[1::2] = -coef * d_plus
    grad = model.gradient(pairs.rows, pairs.cols, pairs.weights * scale[pairs.segments])
    return MetricGradient(loss, grad, degenerate)


def glvq_metric_gradient(pairs: TrainingPairSet, model: CostModel) -> np.ndarray:
    """Return the gradient of the GLVQ loss over pseudo distances."""
    return glvq_metric_loss_and_grad(pairs, model).gradient


def _parameter_matrix(model: CostModel) -> np.ndarray:
    if isinstance(model, EmbeddingCostModel):
        return model.embedding
    if isinstance(model, TransformedCosineCostModel):
        return model.omega
    raise CostModelError(f"{type(model).__name__} has no regularized parameter matrix")


def regularizer_loss_and_grad(model: CostModel, beta: float) -> tuple[float, np.ndarray]:
    """Return beta (log det(A^T A) + ||A||_F^2) and its flat gradient."""
    a = _parameter_matrix(model)
    if beta == 0.0:
        return 0.0, np.zeros(a.size)
    evals, evecs = scipy.linalg.eigh(a.T @ a)
    floored = evals < EIG_FLOOR
    if floored.any():
        _LOGGER.warning(
            "Gram matrix has %d eigenvalues below %g, flooring them", int(floored.sum()), EIG_FLOOR
        )
    logdet = float(np.sum(np.log(np.where(floored, EIG_FLOOR, evals))))
    inverse = np.divide(1.0, evals, out=np.zeros_like(evals), where=~floored)
    grad = 2.0 * a @ (evecs * inverse) @ evecs.T + 2.0 * a
    loss = logdet + float(np.sum(a * a))
    return beta * loss, beta * grad.ravel()


def regularized_loss_and_grad(
    model: CostModel, pairs: TrainingPairSet, beta: float
) -> tuple[float, np.ndarray]:
    """Return GLVQ loss plus both regularizers, with the gradient."""
    metric = glvq_metric_loss_and_grad(pairs, model)
    reg_loss, reg_grad = regularizer_loss_and_grad(model, beta)
    return metric.loss + reg_loss, metric.gradient + reg_grad


class _BudgetExhausted(Exception):
    """Gradient budget used up."""


@dataclass
class MetricPhase:
    """Outcome of one metric phase."""

    model: CostModel
    loss_before: float
    loss_after: float
    evaluations: int


def minimize_metric(
    model: CostModel, pairs: TrainingPairSet, beta: float, budget: int
) -> MetricPhase:
    """Minimize the regularized loss with L-BFGS-B within a gradient budget.

    Returns the best evaluated parameters, so the loss never increases.
    """
    best: dict[str, Any] = {"loss": np.inf, "params": model.params}
    calls = 0
    start_loss = None

    def objective(params: np.ndarray) -> tuple[float, np.ndarray]:
        nonlocal calls, start_loss
        if calls >= budget:
            raise _BudgetExhausted
        calls += 1
        candidate = model.with_params(params)
        loss, grad = regularized_loss_and_grad(candidate, pairs, beta)
        if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
            state = {"loss": loss, "params": params.copy(), "evaluation": calls, "beta": beta}
            _LOGGER.error("Non-finite loss or gradient at evaluation %d", calls)
            raise NumericalError("Metric phase produced a non-finite loss or gradient", state)
        if start_loss is None:
            start_loss = loss
        if loss < best["loss"]:
            best["loss"] = loss
            best["params"] = params.copy()
        return loss, grad

    try:
        result = minimize(
            objective,
            model.params,
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": budget, "maxiter": budget},
        )
        _LOGGER.debug("L-BFGS-B stopped: %s", result.message)
    except _BudgetExhausted:
        _LOGGER.debug("Gradient budget of %d evaluations exhausted", budget)

    return MetricPhase(model.with_params(best["params"]), start_loss, best["loss"], calls)


@dataclass(frozen=True)
class PhaseRecord:
    """Loss of one phase of the outer loop."""

    outer: int
    phase: str
    loss_before: float
    loss_after: float
    evaluations: int = 0


class BedlResult(NamedTuple):
    """Learned cost model, prototypes fitted to it and the phase history."""

    model: CostModel
    prototypes: PrototypeModel
    history: list[PhaseRecord]


def bedl_fit(
    dataset: LabeledDataset,
    config: BedlConfig,
    *,
    seed: int = 0,
    init: CostModel | None = None,
) -> BedlResult:
    """Learn a cost model by alternating prototype selection and metric phases.

    Stops when the prototypes stay put, when a metric phase gains less
    than a small threshold or after `config.outer_limit` rounds. The
    returned prototypes always belong to the returned model.
    """
    if len(dataset) == 0 or len(dataset.classes) < 2:
        raise DatasetError("Need a non-empty dataset with at least two classes")
    trees = dataset.trees
    labels = dataset.labels
    model = init if init is not None else simplex_init(dataset.alphabet)
    initial = model
    prototypes: PrototypeModel | None = None
    history: list[PhaseRecord] = []
    stale = False

    for outer in range(config.outer_limit):
        distances = ted_pairwise(trees, model)
        fitted = median_glvq_fit(
            distances, labels, config.prototypes, seed=seed, init=prototypes
        )
        loss = glvq_loss(glvq_state(distances[:, fitted.indices], labels, fitted))
        history.append(PhaseRecord(outer, "prototypes", loss, loss))
        stale = False
        if fitted.same(prototypes):
            _LOGGER.debug("Prototypes unchanged after %d rounds", outer)
            break
        prototypes = fitted
        if config.budget == 0:
            break

        reference = model if config.refresh == REFRESH_CURRENT else initial
        pairs = TrainingPairSet.build(
            trees, distances, labels, prototypes, reference, averaged=config.averaged
        )
        phase = minimize_metric(model, pairs, config.beta, config.budget)
        history.append(
            PhaseRecord(outer, "metric", phase.loss_before, phase.loss_after, phase.evaluations)
        )
        _LOGGER.debug(
            "Round %d: loss %.6g -> %.6g in %d evaluations",
            outer,
            phase.loss_before,
            phase.loss_after,
            phase.evaluations,
        )
        model = phase.model
        stale = True
        if phase.loss_before - phase.loss_after < BEDL_MIN_GAIN:
            break

    if stale:
        distances = ted_pairwise(trees, model)
        prototypes = median_glvq_fit(
            distances, labels, config.prototypes, seed=seed, init=prototypes
        )
    return BedlResult(model, prototypes, history)
