"""Module for summarizing co-optimal tree mappings as edit frequency matrices."""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

from .const import COOPT_TOL, ENUMERATE_MAX_NODES
from .costs import CostModel
from .error import ContractViolationError, EnumerationLimitError
from .ted import DistanceResult, TableKey, TreeMapping, iter_mappings
from .trees import Tree

_LOGGER = logging.getLogger(__name__)

_DEL = 1
_INS = 2
_REP = 4


@dataclass(frozen=True)
class ScriptSummary:
    """Edit frequencies over pre-order nodes, gap row and column last.

    Entry (i, j) is the share of co-optimal mappings that replace x_i by
    y_j; the gap column holds deletions and the gap row insertions.
    """

    matrix: np.ndarray
    count: int = 1

    @property
    def shape(self) -> tuple[int, int]:
        """Return (|x| + 1, |y| + 1)."""
        return self.matrix.shape

    def cost(self, node_costs: np.ndarray) -> float:
        """Return the frequency weighted cost for pre-order node pair costs."""
        return float(np.sum(self.matrix * node_costs))


def node_costs(x: Tree, y: Tree, model: CostModel) -> np.ndarray:
    """Return c(x_i, y_j) over pre-order nodes, gap row and column last."""
    gap = model.gap
    xl = np.append(x.view.labels, gap)
    yl = np.append(y.view.labels, gap)
    return model.matrix()[xl[:, None], yl[None, :]]


def _validate(x: Tree, y: Tree, model: CostModel, dp: DistanceResult) -> None:
    if dp.x != x or dp.y != y:
        raise ContractViolationError("Distance tables belong to another tree pair")
    gap = model.gap
    xl = np.append(x.view.post_labels, gap)
    yl = np.append(y.view.post_labels, gap)
    if not np.array_equal(dp.costs, model.matrix()[xl[:, None], yl[None, :]]):
        raise ContractViolationError("Distance tables were computed under other costs")


def _to_preorder(x: Tree, y: Tree, post: np.ndarray) -> np.ndarray:
    """Reindex a post-order matrix with trailing gap to pre-order."""
    rows = np.append(x.view.post_of_pre, len(x.view))
    cols = np.append(y.view.post_of_pre, len(y.view))
    return post[rows[:, None], cols[None, :]]


def _zeros(like: list[list[int]]) -> list[list[int]]:
    return [[0] * len(row) for row in like]


class _Cells:
    """Python views of the distance tables with per-cell co-optimal moves."""

    def __init__(self, dp: DistanceResult) -> None:
        """Initialize class."""
        xv, yv = dp.x_view, dp.y_view
        self.n = len(xv)
        self.m = len(yv)
        self.xl = xv.post_lml.tolist()
        self.yl = yv.post_lml.tolist()
        self.costs = dp.costs.tolist()
        self.tables = {key: table.tolist() for key, table in dp.tables.items()}

    def moves(self, key: TableKey, i: int, j: int) -> int:
        """Return the co-optimal moves of a cell with i, j >= 1 as bit flags."""
        sx, sy = key
        t = self.tables[key]
        v, w = sx + i - 1, sy + j - 1
        lv, lw = self.xl[v], self.yl[w]
        c = self.costs
        best = t[i][j]
        flags = 0
        if abs(t[i - 1][j] + c[v][self.m] - best) <= COOPT_TOL:
            flags |= _DEL
        if abs(t[i][j - 1] + c[self.n][w] - best) <= COOPT_TOL:
            flags |= _INS
        rep = self.tables[(lv, lw)][v - lv][w - lw] + t[lv - sx][lw - sy] + c[v][w]
        if abs(rep - best) <= COOPT_TOL:
            flags |= _REP
        return flags


def single_backtrace(x: Tree, y: Tree, c0: CostModel, dp: DistanceResult) -> ScriptSummary:
    """Return the indicator matrix of one co-optimal mapping.

    Ties prefer replacement, then deletion, then insertion.
    """
    _validate(x, y, c0, dp)
    cells = _Cells(dp)
    n, m = cells.n, cells.m
    post = np.zeros((n + 1, m + 1))
    stack: list[tuple[TableKey, int, int]] = [((0, 0), n, m)]
    while stack:
        key, i, j = stack.pop()
        sx, sy = key
        if i == 0:
            post[n, sy : sy + j] = 1.0
            continue
        if j == 0:
            post[sx : sx + i, m] = 1.0
            continue
        v, w = sx + i - 1, sy + j - 1
        flags = cells.moves(key, i, j)
        if flags & _REP:
            lv, lw = cells.xl[v], cells.yl[w]
            post[v, w] = 1.0
            stack.append(((lv, lw), v - lv, w - lw))
            stack.append((key, lv - sx, lw - sy))
        elif flags & _DEL:
            post[v, m] = 1.0
            stack.append((key, i - 1, j))
        else:
            post[n, w] = 1.0
            stack.append((key, i, j - 1))
    return ScriptSummary(_to_preorder(x, y, post))


def coopt_average(x: Tree, y: Tree, c0: CostModel, dp: DistanceResult) -> ScriptSummary:
    """Return the mean edit indicator matrix over all co-optimal mappings.

    Every forest pair holds two counts: N, the co-optimal mappings of the
    pair, and M, those among them that map the rightmost root of the first
    forest. The rightmost root is either deleted or mapped, and once mapped
    the rightmost root of the second forest is either inserted or its
    partner:

        N(F, G) = [del] N(F - v, G) + M(F, G)
        M(F, G) = [ins] M(F, G - w) + [rep] N(F_v, G_w) N(F - F(v), G - G(w))

    A forward pass fills the counts, a backward pass pushes completion
    counts from the full pair down to every edit. Counts are exact
    integers.
    """
    _validate(x, y, c0, dp)
    cells = _Cells(dp)
    n, m = cells.n, cells.m
    xl, yl = cells.xl, cells.yl
    order = sorted(dp.tables)

    inside_n: dict[TableKey, list[list[int]]] = {}
    inside_m: dict[TableKey, list[list[int]]] = {}
    flags: dict[TableKey, list[list[int]]] = {}
    for key in reversed(order):
        sx, sy = key
        rows = len(cells.tables[key])
        cols = len(cells.tables[key][0])
        cn = [[1] * cols for _ in range(rows)]
        cm = [[0] * cols for _ in range(rows)]
        cf = [[0] * cols for _ in range(rows)]
        inside_n[key], inside_m[key], flags[key] = cn, cm, cf
        for i in range(1, rows):
            v = sx + i - 1
            lv = xl[v]
            for j in range(1, cols):
                w = sy + j - 1
                lw = yl[w]
                f = cells.moves(key, i, j)
                cf[i][j] = f
                mapped = 0
                if f & _INS:
                    mapped += cm[i][j - 1]
                if f & _REP:
                    mapped += inside_n[(lv, lw)][v - lv][w - lw] * cn[lv - sx][lw - sy]
                cm[i][j] = mapped
                cn[i][j] = (cn[i - 1][j] if f & _DEL else 0) + mapped

    total = inside_n[(0, 0)][n][m]
    counts = [[0] * (m + 1) for _ in range(n + 1)]
    outside_n = {key: _zeros(inside_n[key]) for key in order}
    outside_m = {key: _zeros(inside_n[key]) for key in order}
    outside_n[(0, 0)][n][m] = 1

    for key in order:
        sx, sy = key
        cn, cm, cf = inside_n[key], inside_m[key], flags[key]
        on, om = outside_n[key], outside_m[key]
        rows, cols = len(cn), len(cn[0])
        for i in range(rows - 1, -1, -1):
            for j in range(cols - 1, -1, -1):
                if i == 0 or j == 0:
                    out = on[i][j]
                    if not out or (i == 0 and j == 0):
                        continue
                    if j == 0:
                        counts[sx + i - 1][m] += out
                        on[i - 1][0] += out
                    else:
                        counts[n][sy + j - 1] += out
                        on[0][j - 1] += out
                    continue

                v, w = sx + i - 1, sy + j - 1
                f = cf[i][j]
                out = on[i][j]
                if out and f & _DEL:
                    counts[v][m] += out * cn[i - 1][j]
                    on[i - 1][j] += out
                om[i][j] += out
                out = om[i][j]
                if not out:
                    continue
                if f & _INS and j > 1:
                    counts[n][w] += out * cm[i][j - 1]
                    om[i][j - 1] += out
                if f & _REP:
                    lv, lw = xl[v], yl[w]
                    sub = inside_n[(lv, lw)][v - lv][w - lw]
                    rest = cn[lv - sx][lw - sy]
                    counts[v][w] += out * sub * rest
                    outside_n[(lv, lw)][v - lv][w - lw] += out * rest
                    on[lv - sx][lw - sy] += out * sub

    if total > 1:
        _LOGGER.debug("Found %d co-optimal mappings", total)
    post = np.array([[value / total for value in row] for row in counts])
    post[n, m] = 0.0
    return ScriptSummary(_to_preorder(x, y, post), total)


def enumerate_coopt(x: Tree, y: Tree, c0: CostModel) -> tuple[int, ScriptSummary]:
    """Return count and mean indicator matrix of co-optimal mappings by exhaustive search."""
    if x.size + y.size > ENUMERATE_MAX_NODES:
        raise EnumerationLimitError(
            f"Trees of {x.size} and {y.size} nodes exceed the bound of {ENUMERATE_MAX_NODES}"
        )
    c0.check_labels(max(int(x.view.labels.max()), int(y.view.labels.max())))
    matrix = c0.matrix()
    xv, yv = x.view, y.view
    priced: list[tuple[float, TreeMapping]] = [
        (mapping.cost(xv, yv, matrix), mapping) for mapping in iter_mappings(xv, yv)
    ]
    best = min(cost for cost, _ in priced)
    optimal = [mapping for cost, mapping in priced if cost - best <= COOPT_TOL]

    n, m = len(xv), len(yv)
    total = np.zeros((n + 1, m + 1))
    for mapping in optimal:
        indicator = np.zeros((n + 1, m + 1))
        for i, j in mapping.pairs:
            indicator[i, j] = 1.0
        indicator[:n, m] = 1.0 - indicator[:n, :m].sum(axis=1)
        indicator[n, :m] = 1.0 - indicator[:n, :m].sum(axis=0)
        total += indicator
    return len(optimal), ScriptSummary(total / len(optimal), len(optimal))
