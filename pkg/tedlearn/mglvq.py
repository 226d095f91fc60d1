"""Module for median generalized learning vector quantization on distance matrices."""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

from .const import MGLVQ_MIN_GAIN
from .error import DatasetError, NumericalError

_LOGGER = logging.getLogger(__name__)

# Allowed drop of the EM objective due to rounding
_OBJECTIVE_SLACK = 1e-9


@dataclass(frozen=True)
class PrototypeModel:
    """Prototypes as training-set indices with their classes."""

    indices: np.ndarray
    classes: np.ndarray
    history: tuple[float, ...] = ()

    def __len__(self) -> int:
        """Return number of prototypes."""
        return len(self.indices)

    def same(self, other: PrototypeModel | None) -> bool:
        """Return if another model holds the same prototypes."""
        return other is not None and np.array_equal(self.indices, other.indices)


@dataclass(frozen=True)
class GlvqState:
    """Distances of every example to its closest correct and wrong prototype.

    `plus` and `minus` hold positions of those prototypes in the model.
    """

    d_plus: np.ndarray
    d_minus: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        """Return mask of examples at distance 0 from both prototypes."""
        return (self.d_plus + self.d_minus) <= 0.0

    @property
    def mu(self) -> np.ndarray:
        """Return (d+ - d-) / (d+ + d-), 0 for degenerate examples."""
        total = self.d_plus + self.d_minus
        return np.divide(
            self.d_plus - self.d_minus, total, out=np.zeros_like(total), where=total > 0.0
        )

    @property
    def g_plus(self) -> np.ndarray:
        """Return 2 - d+ / (d+ + d-)."""
        return 2.0 - _ratio(self.d_plus, self.d_minus)

    @property
    def g_minus(self) -> np.ndarray:
        """Return 2 + d- / (d+ + d-)."""
        return 2.0 + _ratio(self.d_minus, self.d_plus)

    def objective(self) -> float:
        """Return sum log(g+ + g-)."""
        return float(np.sum(np.log(self.g_plus + self.g_minus)))


def _ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    total = a + b
    return np.divide(a, total, out=np.full_like(total, 0.5), where=total > 0.0)


def glvq_state(
    distances: np.ndarray, labels: np.ndarray, model: PrototypeModel
) -> GlvqState:
    """Return the state for distances from examples (rows) to prototypes (columns)."""
    distances = np.asarray(distances, dtype=float)
    labels = np.asarray(labels)
    same = labels[:, None] == model.classes[None, :]
    if not np.all(same.any(axis=1)) or np.all(same, axis=1).any():
        raise DatasetError("Every example needs a correct and a wrong prototype")
    plus_d = np.where(same, distances, np.inf)
    minus_d = np.where(same, np.inf, distances)
    plus = np.argmin(plus_d, axis=1)
    minus = np.argmin(minus_d, axis=1)
    rows = np.arange(len(labels))
    return GlvqState(plus_d[rows, plus], minus_d[rows, minus], plus, minus)


def glvq_loss(state: GlvqState) -> float:
    """Return sum log(4 + mu)."""
    degenerate = int(state.degenerate.sum())
    if degenerate:
        _LOGGER.warning("%d examples are at distance 0 from both prototypes", degenerate)
    return float(np.sum(np.log(4.0 + state.mu)))


def _lower_bound(
    g_plus: np.ndarray,
    g_minus: np.ndarray,
    gamma_plus: np.ndarray,
    gamma_minus: np.ndarray,
) -> np.ndarray:
    """Return L summed over examples (axis 0) for fixed responsibilities."""
    return np.sum(
        gamma_plus * np.log(g_plus / gamma_plus) + gamma_minus * np.log(g_minus / gamma_minus),
        axis=0,
    )


def _initial(labels: np.ndarray, k: int, seed: int) -> PrototypeModel:
    rng = np.random.default_rng(seed)
    indices = []
    classes = []
    for cls in np.unique(labels):
        members = np.nonzero(labels == cls)[0]
        count = min(k, len(members))
        if count < k:
            _LOGGER.warning(
                "Class %d has %d members, using %d prototypes instead of %d",
                cls,
                len(members),
                count,
                k,
            )
        chosen = np.sort(rng.choice(members, size=count, replace=False))
        indices.extend(chosen.tolist())
        classes.extend([cls] * count)
    return PrototypeModel(np.asarray(indices, dtype=np.intp), np.asarray(classes))


def median_glvq_fit(
    distances: np.ndarray,
    labels: np.ndarray,
    k: int,
    *,
    seed: int = 0,
    init: PrototypeModel | None = None,
) -> PrototypeModel:
    """Select k prototypes per class among the training points by generalized EM.

    Each M-step visits the prototypes in order and moves a prototype to the
    first same-class point, in index order, that raises the lower bound L
    for the current responsibilities. Responsibilities are refreshed after
    every accepted move; the fit ends when no move raises L.
    """
    distances = np.asarray(distances, dtype=float)
    labels = np.asarray(labels)
    if distances.shape != (len(labels), len(labels)):
        raise DatasetError("Distance matrix must be square with one label per row")
    if len(np.unique(labels)) < 2:
        raise DatasetError("Median GLVQ needs at least two classes")
    if k < 1:
        raise DatasetError("Need at least one prototype per class")

    model = init if init is not None else _initial(labels, k, seed)
    indices = model.indices.copy()
    classes = model.classes
    state = glvq_state(distances[:, indices], labels, model)
    history = [state.objective()]

    improved = True
    while improved:
        improved = False
        for p in range(len(indices)):
            cls = classes[p]
            gp, gm = state.g_plus, state.g_minus
            total = gp + gm
            gamma_plus, gamma_minus = gp / total, gm / total
            bound = float(_lower_bound(gp, gm, gamma_plus, gamma_minus))

            candidates = np.nonzero(labels == cls)[0]
            candidates = candidates[~np.isin(candidates, indices)]
            if not len(candidates):
                continue

            # Closest prototype other than p on the side p belongs to
            own = labels == cls
            others = np.delete(np.arange(len(indices)), p)
            same = labels[:, None] == classes[others][None, :]
            side = np.where(
                np.where(own[:, None], same, ~same), distances[:, indices[others]], np.inf
            )
            rest = side.min(axis=1) if len(others) else np.full(len(labels), np.inf)
            moved = np.minimum(rest[:, None], distances[:, candidates])
            d_plus = np.where(own[:, None], moved, state.d_plus[:, None])
            d_minus = np.where(own[:, None], state.d_minus[:, None], moved)
            new_gp = 2.0 - _ratio(d_plus, d_minus)
            new_gm = 2.0 + _ratio(d_minus, d_plus)
            bounds = _lower_bound(new_gp, new_gm, gamma_plus[:, None], gamma_minus[:, None])

            better = np.nonzero(bounds > bound + MGLVQ_MIN_GAIN)[0]
            if not len(better):
                continue

            chosen = int(candidates[better[0]])
            _LOGGER.debug("Moving prototype %d from %d to %d", p, indices[p], chosen)
            indices[p] = chosen
            improved = True
            state = glvq_state(
                distances[:, indices], labels, PrototypeModel(indices, classes)
            )
            objective = state.objective()
            if objective < history[-1] - _OBJECTIVE_SLACK:
                raise NumericalError(
                    "Median GLVQ objective decreased",
                    {"before": history[-1], "after": objective, "indices": indices.tolist()},
                )
            history.append(objective)

    degenerate = int(state.degenerate.sum())
    if degenerate:
        _LOGGER.warning("%d examples are at distance 0 from both prototypes", degenerate)
    _LOGGER.debug("Median GLVQ finished after %d moves", len(history) - 1)
    return PrototypeModel(indices, classes, tuple(history))


def classify_nearest_prototype(
    distances: np.ndarray, model: PrototypeModel
) -> np.ndarray:
    """Return the class of the closest prototype, lower prototype index on ties."""
    return model.classes[np.argmin(np.asarray(distances), axis=1)]
