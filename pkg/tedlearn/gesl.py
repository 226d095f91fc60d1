"""Module for good edit similarity learning of explicit cost matrices."""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
import scipy.sparse

from .const import DEFAULT_GESL_STEP, DEFAULT_SUBGRADIENT_ITERATIONS
from .costs import ExplicitCostMatrix
from .error import DatasetError
from .pseudo import PairContext
from .ted import ted_pairwise
from .trees import LabeledDataset

_LOGGER = logging.getLogger(__name__)

LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class GeslResult:
    """Learned cost matrix, slack and the running best objective."""

    costs: ExplicitCostMatrix
    eta: float
    objective: float
    history: tuple[float, ...]


def select_pairs(
    distances: np.ndarray, labels: np.ndarray, k: int
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Return pairs to the k closest same-class and k furthest other-class points.

    Ties go to the lower index.
    """
    labels = np.asarray(labels)
    positive = []
    negative = []
    index = np.arange(len(labels))
    for i in range(len(labels)):
        same = index[(labels == labels[i]) & (index != i)]
        other = index[labels != labels[i]]
        near = same[np.lexsort((same, distances[i, same]))][:k]
        far = other[np.lexsort((other, -distances[i, other]))][:k]
        positive.extend((i, int(j)) for j in near)
        negative.extend((i, int(j)) for j in far)
    return positive, negative


def _pair_matrix(contexts: list[PairContext], size: int) -> scipy.sparse.csr_matrix:
    """Return the pairs x (U+1)^2 matrix mapping flat costs to pseudo distances."""
    if not contexts:
        return scipy.sparse.csr_matrix((0, size * size))
    rows = np.concatenate([np.full(len(c.weights), p) for p, c in enumerate(contexts)])
    cols = np.concatenate([c.rows * size + c.cols for c in contexts])
    data = np.concatenate([c.weights for c in contexts])
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(len(contexts), size * size))


def gesl_objective(
    costs: np.ndarray,
    eta: float,
    positive: scipy.sparse.csr_matrix,
    negative: scipy.sparse.csr_matrix,
    beta: float,
) -> float:
    """Return beta ||c||^2 + sum_P [d - eta]_+ + sum_N [log 2 + eta - d]_+."""
    flat = costs.ravel()
    return float(
        beta * np.dot(flat, flat)
        + np.sum(np.maximum(positive @ flat - eta, 0.0))
        + np.sum(np.maximum(LOG2 + eta - negative @ flat, 0.0))
    )


def gesl_fit(
    dataset: LabeledDataset,
    k: int,
    beta: float,
    *,
    iterations: int = DEFAULT_SUBGRADIENT_ITERATIONS,
    step: float = DEFAULT_GESL_STEP,
) -> GeslResult:
    """Learn an explicit cost matrix by projected subgradient descent.

    Edit scripts are backtraced once under unit costs and kept fixed. Costs
    stay non-negative with a zero diagonal and eta stays in [0, log 2].
    """
    if len(dataset) < 2:
        raise DatasetError("Need at least two trees")
    c0 = ExplicitCostMatrix.unit(dataset.alphabet)
    size = c0.gap + 1
    distances = ted_pairwise(dataset.trees, c0)
    positive_pairs, negative_pairs = select_pairs(distances, dataset.labels, k)
    trees = dataset.trees

    def contexts(pairs: list[tuple[int, int]]) -> list[PairContext]:
        return [PairContext.build(trees[i], trees[j], c0, averaged=False) for i, j in pairs]

    positive = _pair_matrix(contexts(positive_pairs), size)
    negative = _pair_matrix(contexts(negative_pairs), size)
    _LOGGER.debug(
        "Learning costs from %d positive and %d negative pairs",
        positive.shape[0],
        negative.shape[0],
    )
    flat, eta, best, history = gesl_solve(
        positive, negative, beta, c0.entries, iterations=iterations, step=step
    )
    _LOGGER.debug("GESL objective %.6g -> %.6g", history[0], best)
    costs = ExplicitCostMatrix(dataset.alphabet, flat.reshape(size, size))
    return GeslResult(costs, eta, best, history)


def gesl_solve(
    positive: scipy.sparse.csr_matrix,
    negative: scipy.sparse.csr_matrix,
    beta: float,
    initial: np.ndarray,
    *,
    iterations: int = DEFAULT_SUBGRADIENT_ITERATIONS,
    step: float = DEFAULT_GESL_STEP,
) -> tuple[np.ndarray, float, float, tuple[float, ...]]:
    """Return the best flat costs, eta, objective and the running best objectives."""
    size = initial.shape[0]
    diagonal = np.eye(size, dtype=bool).ravel()
    flat = np.array(initial, dtype=float).ravel()
    eta = LOG2 / 2.0
    best = gesl_objective(flat, eta, positive, negative, beta)
    best_flat, best_eta = flat.copy(), eta
    history = [best]

    for t in range(iterations):
        active_pos = (positive @ flat - eta) > 0.0
        active_neg = (LOG2 + eta - negative @ flat) > 0.0
        grad = 2.0 * beta * flat
        grad += positive.T @ active_pos.astype(float)
        grad -= negative.T @ active_neg.astype(float)
        grad_eta = float(active_neg.sum() - active_pos.sum())

        rate = step / (1.0 + t)
        flat = np.maximum(flat - rate * grad, 0.0)
        flat[diagonal] = 0.0
        eta = float(np.clip(eta - rate * grad_eta, 0.0, LOG2))

        value = gesl_objective(flat, eta, positive, negative, beta)
        if value < best:
            best, best_flat, best_eta = value, flat.copy(), eta
        history.append(best)

    return best_flat, best_eta, best, tuple(history)
