"""Module for principal component projections of embedding vectors."""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
import scipy.linalg

from .const import DEFAULT_VARIANCE
from .error import TedLearnError

_LOGGER = logging.getLogger(__name__)

MODE_TOP2 = "top2"
MODE_VARIANCE = "variance"
MODE_ALL = "all"


@dataclass(frozen=True)
class PcaResult:
    """Projection of row vectors onto principal directions."""

    projected: np.ndarray
    components: np.ndarray
    mean: np.ndarray
    explained: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        """Return cumulative explained variance ratios of the kept components."""
        return np.cumsum(self.explained)

    def reconstruct(self) -> np.ndarray:
        """Map the projection back into the original space."""
        return self.projected @ self.components + self.mean


def pca_project(
    vectors: np.ndarray, mode: str = MODE_TOP2, variance: float = DEFAULT_VARIANCE
) -> PcaResult:
    """Project row vectors onto their leading principal directions.

    Mode `top2` keeps two directions, `variance` the fewest directions that
    explain at least `variance` of the total, `all` every direction.
    """
    data = np.asarray(vectors, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise TedLearnError("PCA needs at least two vectors")

    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (data.shape[0] - 1)
    evals, evecs = scipy.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    # Largest entry of each direction is positive
    pivot = np.argmax(np.abs(evecs), axis=0)
    evecs = evecs * np.sign(evecs[pivot, np.arange(evecs.shape[1])])

    total = float(evals.sum())
    dim = data.shape[1]
    if mode == MODE_TOP2:
        keep = min(2, dim)
    elif mode == MODE_VARIANCE:
        if total <= 0.0:
            keep = 1
        else:
            ratios = np.cumsum(evals) / total
            keep = int(np.searchsorted(ratios, variance - 1e-12) + 1)
            keep = min(keep, dim)
    elif mode == MODE_ALL:
        keep = dim
    else:
        raise TedLearnError(f"Unknown PCA mode '{mode}'")

    if total <= 0.0:
        _LOGGER.warning("PCA input has zero variance")
        return PcaResult(
            np.zeros((data.shape[0], keep)),
            evecs[:, :keep].T,
            mean,
            np.zeros(keep),
        )

    components = evecs[:, :keep].T
    return PcaResult(centered @ components.T, components, mean, evals[:keep] / total)
