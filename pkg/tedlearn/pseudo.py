"""Module for the pseudo edit distance, linear in the cost function."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .coopt import ScriptSummary, coopt_average, single_backtrace
from .costs import CostModel, EmbeddingCostModel, ExplicitCostMatrix, embedding_cost_gradient
from .error import ContractViolationError
from .ted import ted
from .trees import Tree


@dataclass(frozen=True)
class PairContext:
    """Tree pair with edit frequencies held fixed at a reference cost function.

    The frequencies are also aggregated per label pair, so evaluating the
    pseudo distance only touches the distinct label pairs it needs.
    """

    x: Tree
    y: Tree
    summary: ScriptSummary
    gap: int
    rows: np.ndarray = field(init=False, repr=False)
    cols: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Aggregate edit frequencies per label pair."""
        n, m = self.x.size, self.y.size
        if self.summary.shape != (n + 1, m + 1):
            raise ContractViolationError(
                f"Summary of shape {self.summary.shape} does not fit trees of {n} and {m} nodes"
            )
        xl = np.append(self.x.view.labels, self.gap)
        yl = np.append(self.y.view.labels, self.gap)
        rows, cols = np.nonzero(self.summary.matrix)
        pairs = scipy.sparse.coo_matrix(
            (self.summary.matrix[rows, cols], (xl[rows], yl[cols])),
            shape=(self.gap + 1, self.gap + 1),
        )
        pairs.sum_duplicates()
        object.__setattr__(self, "rows", pairs.row.astype(np.intp))
        object.__setattr__(self, "cols", pairs.col.astype(np.intp))
        object.__setattr__(self, "weights", pairs.data)

    @classmethod
    def build(cls, x: Tree, y: Tree, model: CostModel, *, averaged: bool = True) -> PairContext:
        """Return the context with frequencies taken at `model`."""
        dp = ted(x, y, model)
        summarize = coopt_average if averaged else single_backtrace
        return cls(x, y, summarize(x, y, model, dp), model.gap)

    def scaled(self, factor: float) -> PairContext:
        """Return the context with all frequencies multiplied by a factor."""
        summary = ScriptSummary(self.summary.matrix * factor, self.summary.count)
        return PairContext(self.x, self.y, summary, self.gap)


def _check(ctx: PairContext, model: CostModel) -> None:
    if ctx.gap != model.gap:
        raise ContractViolationError(
            f"Context over {ctx.gap} labels used with a model over {model.gap} labels"
        )


def pseudo_distance(ctx: PairContext, model: CostModel) -> float:
    """Return sum_ij P[i, j] c(x_i, y_j)."""
    _check(ctx, model)
    return float(np.dot(ctx.weights, model.pair_costs(ctx.rows, ctx.cols)))


def pseudo_distance_grad(ctx: PairContext, model: CostModel) -> np.ndarray:
    """Return the flat gradient of the pseudo distance with respect to the model parameters."""
    _check(ctx, model)
    return model.gradient(ctx.rows, ctx.cols, ctx.weights)


def pseudo_distance_grad_matrix(ctx: PairContext, model: ExplicitCostMatrix) -> np.ndarray:
    """Return the gradient with respect to the cost matrix entries."""
    _check(ctx, model)
    grad = scipy.sparse.coo_matrix(
        (ctx.weights, (ctx.rows, ctx.cols)), shape=(model.gap + 1, model.gap + 1)
    ).toarray()
    grad[-1, -1] = 0.0
    return grad


def pseudo_distance_grad_embedding(
    ctx: PairContext, model: EmbeddingCostModel, label: int | str
) -> np.ndarray:
    """Return the gradient with respect to the embedding a(label).

    Sums P[i, j] times the unit direction from a(y_j) to a(label) over the
    occurrences of the label in x, and the mirrored terms over its
    occurrences in y.
    """
    _check(ctx, model)
    idx = model.alphabet.index(label) if isinstance(label, str) else label
    grad = np.zeros(model.dim)
    matrix = ctx.summary.matrix
    xl = np.append(ctx.x.view.labels, model.gap)
    yl = np.append(ctx.y.view.labels, model.gap)
    for i in np.nonzero(xl == idx)[0]:
        for j in np.nonzero(matrix[i])[0]:
            grad += matrix[i, j] * embedding_cost_gradient(model, idx, int(yl[j]))[0]
    for j in np.nonzero(yl == idx)[0]:
        for i in np.nonzero(matrix[:, j])[0]:
            grad += matrix[i, j] * embedding_cost_gradient(model, int(xl[i]), idx)[1]
    return grad
