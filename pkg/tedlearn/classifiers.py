"""Module for classifiers that only need distances to training trees."""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

from .const import DEFAULT_GOODNESS_STEP, DEFAULT_SUBGRADIENT_ITERATIONS
from .error import DatasetError

_LOGGER = logging.getLogger(__name__)


def knn_classify(distances: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Return the majority class among the k nearest training points.

    Neighbours at equal distance are taken by lower training index. Tied
    votes go to the class with the smaller summed neighbour distance, then
    to the lower class id.
    """
    distances = np.atleast_2d(np.asarray(distances, dtype=float))
    labels = np.asarray(labels)
    if not 1 <= k <= distances.shape[1]:
        raise DatasetError(f"k must be in [1, {distances.shape[1]}], got {k}")
    classes = np.unique(labels)
    out = np.empty(distances.shape[0], dtype=labels.dtype)
    for row, dist in enumerate(distances):
        nearest = np.argsort(dist, kind="stable")[:k]
        votes = np.array([np.sum(labels[nearest] == c) for c in classes])
        summed = np.array([np.sum(dist[nearest][labels[nearest] == c]) for c in classes])
        tied = np.nonzero(votes == votes.max())[0]
        # lexsort is stable, ties on the sum keep the lower class id
        out[row] = classes[tied[np.lexsort((summed[tied],))[0]]]
    return out


def similarity(distances: np.ndarray) -> np.ndarray:
    """Return k = 2 exp(-d) - 1."""
    return 2.0 * np.exp(-np.asarray(distances, dtype=float)) - 1.0


@dataclass(frozen=True)
class GoodnessModel:
    """Weights over training points per one-vs-rest problem.

    A binary task holds a single problem whose positive class is the higher
    class id.
    """

    alphas: np.ndarray
    classes: np.ndarray
    lam: float

    @property
    def binary(self) -> bool:
        """Return if the model separates exactly two classes."""
        return len(self.classes) == 2


def goodness_objective(
    alpha: np.ndarray, kernel: np.ndarray, targets: np.ndarray, lam: float
) -> float:
    """Return sum_i [1 - l_i sum_j alpha_j k_ij]_+ + lam ||alpha||_1."""
    margins = targets * (kernel @ alpha)
    return float(np.sum(np.maximum(1.0 - margins, 0.0)) + lam * np.sum(np.abs(alpha)))


def _solve(
    kernel: np.ndarray, targets: np.ndarray, lam: float, iterations: int, step: float
) -> np.ndarray:
    """Minimize the goodness objective by normalized subgradient steps.

    Returns the best of all iterates and the average of the second half.
    """
    alpha = np.zeros(kernel.shape[1])
    best = alpha.copy()
    best_value = goodness_objective(alpha, kernel, targets, lam)
    suffix = np.zeros_like(alpha)
    start = iterations // 2
    for t in range(iterations):
        active = targets * (kernel @ alpha) < 1.0
        grad = -(targets[active] @ kernel[active]) + lam * np.sign(alpha)
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            break
        alpha = alpha - step / np.sqrt(t + 1.0) * grad / norm
        value = goodness_objective(alpha, kernel, targets, lam)
        if value < best_value:
            best, best_value = alpha.copy(), value
        if t >= start:
            suffix += alpha

    if iterations > start:
        averaged = suffix / (iterations - start)
        if goodness_objective(averaged, kernel, targets, lam) < best_value:
            best = averaged
    return best


def goodness_fit(
    distances: np.ndarray,
    labels: np.ndarray,
    lam: float,
    *,
    iterations: int = DEFAULT_SUBGRADIENT_ITERATIONS,
    step: float = DEFAULT_GOODNESS_STEP,
) -> GoodnessModel:
    """Fit the L1 regularized hinge loss classifier over similarities."""
    kernel = similarity(distances)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if len(classes) < 2:
        raise DatasetError("Goodness classifier needs at least two classes")
    positives = classes[1:] if len(classes) == 2 else classes
    alphas = np.stack(
        [
            _solve(kernel, np.where(labels == c, 1.0, -1.0), lam, iterations, step)
            for c in positives
        ]
    )
    _LOGGER.debug(
        "Fitted %d goodness problems, %d non-zero weights",
        len(positives),
        int(np.count_nonzero(alphas)),
    )
    return GoodnessModel(alphas, classes, lam)


def goodness_scores(model: GoodnessModel, similarities: np.ndarray) -> np.ndarray:
    """Return sum_j alpha_j k(x, x_j) per test point and problem."""
    return np.atleast_2d(similarities) @ model.alphas.T


def goodness_predict(model: GoodnessModel, similarities: np.ndarray) -> np.ndarray:
    """Return predicted classes from test-to-training similarities.

    Binary scores of exactly 0 go to the positive class.
    """
    scores = goodness_scores(model, similarities)
    if model.binary:
        return np.where(scores[:, 0] >= 0.0, model.classes[1], model.classes[0])
    return model.classes[np.argmax(scores, axis=1)]


def error_rate(predicted: np.ndarray, labels: np.ndarray) -> float:
    """Return the fraction of wrong predictions."""
    return float(np.mean(np.asarray(predicted) != np.asarray(labels)))
