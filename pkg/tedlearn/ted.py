"""Module for tree edit distances under arbitrary cost functions.

Forests are contiguous post-order spans that start at the leftmost leaf of
some node. For every pair of such starts the forest distances of all
prefixes are kept in one table, so the tables double as the memo that
backtracing and co-optimal counting walk.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
import logging

import numpy as np

from .const import BRUTE_FORCE_MAX_NODES
from .costs import CostModel, closure
from .error import EnumerationLimitError
from .trees import PreorderView, Tree

_LOGGER = logging.getLogger(__name__)

TableKey = tuple[int, int]


@dataclass(frozen=True)
class DistanceResult:
    """Tree edit distance together with its forest distance tables.

    `costs` holds c(x_p, y_q) over post-order nodes, gap row and column
    last. `tables[(sx, sy)][i, j]` is the distance between the post-order
    spans [sx, sx + i) of x and [sy, sy + j) of y.
    """

    distance: float
    x: Tree
    y: Tree
    costs: np.ndarray
    tables: dict[TableKey, np.ndarray]

    @property
    def x_view(self) -> PreorderView:
        """Return the view of the first tree."""
        return self.x.view

    @property
    def y_view(self) -> PreorderView:
        """Return the view of the second tree."""
        return self.y.view


@dataclass(frozen=True)
class TreeMapping:
    """One-to-one ancestry and order preserving pairs of pre-order nodes."""

    pairs: tuple[tuple[int, int], ...]

    def cost(self, xv: PreorderView, yv: PreorderView, matrix: np.ndarray) -> float:
        """Return the summed cost of replacements, deletions and insertions."""
        gap = matrix.shape[0] - 1
        mapped_x = {i for i, _ in self.pairs}
        mapped_y = {j for _, j in self.pairs}
        total = sum(matrix[xv.labels[i], yv.labels[j]] for i, j in self.pairs)
        total += sum(matrix[xv.labels[i], gap] for i in range(len(xv)) if i not in mapped_x)
        total += sum(matrix[gap, yv.labels[j]] for j in range(len(yv)) if j not in mapped_y)
        return float(total)


def _cost_tensor(xv: PreorderView, yvs: Sequence[PreorderView], matrix: np.ndarray) -> np.ndarray:
    """Return the (B, n+1, m+1) post-order cost tensor of x against B equally shaped trees."""
    gap = matrix.shape[0] - 1
    xl = np.append(xv.post_labels, gap)
    yl = np.stack([np.append(yv.post_labels, gap) for yv in yvs])
    return matrix[xl[None, :, None], yl[:, None, :]]


def _forest_tables(
    xv: PreorderView, yv: PreorderView, cost: np.ndarray
) -> dict[TableKey, np.ndarray]:
    """Fill all forest distance tables for a batch of cost tensors.

    `yv` stands for every tree in the batch, they share its shape.
    """
    batch = cost.shape[0]
    n, m = len(xv), len(yv)
    xl = xv.post_lml.tolist()
    yl = yv.post_lml.tolist()
    tables: dict[TableKey, np.ndarray] = {}

    for sx in sorted(xv.span_ends, reverse=True):
        kx = xv.span_ends[sx]
        for sy in sorted(yv.span_ends, reverse=True):
            ky = yv.span_ends[sy]
            t = np.empty((batch, kx - sx + 2, ky - sy + 2))
            t[:, 0, 0] = 0.0
            t[:, 1:, 0] = np.cumsum(cost[:, sx : kx + 1, m], axis=1)
            t[:, 0, 1:] = np.cumsum(cost[:, n, sy : ky + 1], axis=1)
            for v in range(sx, kx + 1):
                i = v - sx + 1
                lv = xl[v]
                delete = cost[:, v, m]
                for w in range(sy, ky + 1):
                    j = w - sy + 1
                    lw = yl[w]
                    sub = t if (lv == sx and lw == sy) else tables[(lv, lw)]
                    rep = sub[:, v - lv, w - lw] + t[:, lv - sx, lw - sy] + cost[:, v, w]
                    gaps = np.minimum(t[:, i - 1, j] + delete, t[:, i, j - 1] + cost[:, n, w])
                    t[:, i, j] = np.minimum(gaps, rep)
            tables[(sx, sy)] = t
    return tables


def _check(trees: Sequence[Tree], model: CostModel) -> None:
    if trees:
        model.check_labels(max(int(t.view.labels.max()) for t in trees))


def ted(x: Tree, y: Tree, model: CostModel) -> DistanceResult:
    """Return the tree edit distance of x and y under a cost model.

    For a pseudo-metric this is the cheapest edit script; otherwise it is
    the cheapest mapping and may overestimate the cheapest script.
    """
    _check((x, y), model)
    cost = _cost_tensor(x.view, [y.view], model.matrix())
    tables = _forest_tables(x.view, y.view, cost)
    squeezed = {key: table[0] for key, table in tables.items()}
    distance = float(squeezed[(0, 0)][len(x.view), len(y.view)])
    return DistanceResult(distance, x, y, cost[0], squeezed)


def _distances_to(x: Tree, ys: Sequence[Tree], matrix: np.ndarray) -> np.ndarray:
    """Return ted(x, y) for all ys, batching equally shaped trees."""
    out = np.empty(len(ys))
    groups: dict[tuple[int, ...], list[int]] = defaultdict(list)
    for k, y in enumerate(ys):
        groups[y.view.shape].append(k)
    n = len(x.view)
    for members in groups.values():
        yvs = [ys[k].view for k in members]
        cost = _cost_tensor(x.view, yvs, matrix)
        tables = _forest_tables(x.view, yvs[0], cost)
        out[members] = tables[(0, 0)][:, n, len(yvs[0])]
    return out


def ted_matrix(xs: Sequence[Tree], ys: Sequence[Tree], model: CostModel) -> np.ndarray:
    """Return the len(xs) x len(ys) matrix of tree edit distances."""
    _check([*xs, *ys], model)
    matrix = model.matrix()
    out = np.empty((len(xs), len(ys)))
    for i, x in enumerate(xs):
        out[i] = _distances_to(x, ys, matrix)
    return out


def ted_pairwise(trees: Sequence[Tree], model: CostModel) -> np.ndarray:
    """Return the square matrix of tree edit distances within one corpus."""
    if not model.is_symmetric():
        return ted_matrix(trees, trees, model)
    _check(trees, model)
    matrix = model.matrix()
    size = len(trees)
    out = np.zeros((size, size))
    for i in range(size - 1):
        row = _distances_to(trees[i], trees[i + 1 :], matrix)
        out[i, i + 1 :] = row
        out[i + 1 :, i] = row
    _LOGGER.debug("Computed %d pairwise tree edit distances", size * (size - 1) // 2)
    return out


def iter_mappings(xv: PreorderView, yv: PreorderView) -> Iterator[TreeMapping]:
    """Yield every valid mapping between two trees.

    Mapped pairs are increasing in both pre-orders, so x nodes are assigned
    in order and y candidates only ever move right.
    """
    n, m = len(xv), len(yv)
    pairs: list[tuple[int, int]] = []

    def extend(i: int, last: int) -> Iterator[TreeMapping]:
        if i == n:
            yield TreeMapping(tuple(pairs))
            return
        yield from extend(i + 1, last)
        for j in range(last + 1, m):
            if all(
                xv.is_ancestor(pi, i) == yv.is_ancestor(pj, j) for pi, pj in pairs
            ):
                pairs.append((i, j))
                yield from extend(i + 1, j)
                pairs.pop()

    yield from extend(0, -1)


def brute_force_ted(x: Tree, y: Tree, model: CostModel) -> float:
    """Return the cheapest edit script cost by exhaustive mapping search.

    Single edits may route a label through intermediate labels, so mappings
    are priced with the shortest-path closure of the cost matrix.
    """
    if x.size + y.size > BRUTE_FORCE_MAX_NODES:
        raise EnumerationLimitError(
            f"Trees of {x.size} and {y.size} nodes exceed the bound of {BRUTE_FORCE_MAX_NODES}"
        )
    _check((x, y), model)
    matrix = closure(model)
    return min(m.cost(x.view, y.view, matrix) for m in iter_mappings(x.view, y.view))
