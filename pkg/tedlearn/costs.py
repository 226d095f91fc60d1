"""Module for edit cost functions over an alphabet plus the gap symbol."""

from __future__ import annotations

from abc import ABC, abstractmethod
import csv
from dataclasses import dataclass, field
from itertools import product
import logging
from pathlib import Path

import numpy as np
import scipy.linalg

from .const import COSINE_GAP_COST, DEFAULT_VARIANCE, GAP, NORM_EPS
from .error import CostModelError, DatasetError
from .pca import pca_project
from .trees import Alphabet

_LOGGER = logging.getLogger(__name__)


class CostModel(ABC):
    """Base class for an edit cost function c over (X ∪ {−})².

    Label indices run from 0 to U - 1, index U denotes the gap.
    """

    def __init__(self, alphabet: Alphabet) -> None:
        """Initialize class."""
        self._alphabet = alphabet

    @property
    def alphabet(self) -> Alphabet:
        """Return alphabet."""
        return self._alphabet

    @property
    def size(self) -> int:
        """Return number of labels U."""
        return self._alphabet.size

    @property
    def gap(self) -> int:
        """Return index of the gap."""
        return self._alphabet.size

    @abstractmethod
    def pair_costs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Return c(a, b) elementwise for broadcastable index arrays."""

    @property
    @abstractmethod
    def params(self) -> np.ndarray:
        """Return a flat copy of the learnable parameters."""

    @abstractmethod
    def with_params(self, params: np.ndarray) -> CostModel:
        """Return a model of the same kind with other parameters."""

    @abstractmethod
    def gradient(
        self, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Return the flat gradient of sum_k weights[k] * c(rows[k], cols[k])."""

    def matrix(self) -> np.ndarray:
        """Return the materialized (U+1) x (U+1) cost matrix, gap last."""
        idx = np.arange(self.size + 1)
        return self.pair_costs(idx[:, None], idx[None, :])

    def evaluate(self, x: int | str, y: int | str) -> float:
        """Return the cost of editing x into y, labels or indices."""
        a = self._alphabet.index(x) if isinstance(x, str) else x
        b = self._alphabet.index(y) if isinstance(y, str) else y
        return float(self.pair_costs(np.asarray(a), np.asarray(b)))

    def is_symmetric(self) -> bool:
        """Return if c(x, y) = c(y, x) for all labels."""
        return True

    def check_labels(self, max_label: int) -> None:
        """Raise if a tree label is outside of this model's alphabet."""
        if max_label >= self.size:
            raise CostModelError(
                f"Label index {max_label} outside of cost model alphabet of size {self.size}"
            )


class ExplicitCostMatrix(CostModel):
    """Class for representing a cost function as an explicit matrix."""

    def __init__(self, alphabet: Alphabet, entries: np.ndarray) -> None:
        """Initialize class."""
        super().__init__(alphabet)
        entries = np.array(entries, dtype=float)
        n = alphabet.size + 1
        if entries.shape != (n, n):
            raise CostModelError(f"Cost matrix must be {n}x{n}, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise CostModelError("Cost matrix has non-finite entries")
        if entries[-1, -1] != 0.0:
            raise CostModelError("c(-, -) must be 0")
        entries.flags.writeable = False
        self._entries = entries

    @classmethod
    def unit(cls, alphabet: Alphabet) -> ExplicitCostMatrix:
        """Return unit costs: 0 on the diagonal, 1 elsewhere."""
        n = alphabet.size + 1
        return cls(alphabet, np.ones((n, n)) - np.eye(n))

    @property
    def entries(self) -> np.ndarray:
        """Return the read-only cost matrix."""
        return self._entries

    def pair_costs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Return c(a, b) elementwise."""
        return self._entries[a, b]

    def matrix(self) -> np.ndarray:
        """Return a copy of the cost matrix."""
        return self._entries.copy()

    @property
    def params(self) -> np.ndarray:
        """Return the flattened matrix."""
        return self._entries.ravel().copy()

    def with_params(self, params: np.ndarray) -> ExplicitCostMatrix:
        """Return a matrix model with other entries."""
        return ExplicitCostMatrix(self.alphabet, np.reshape(params, self._entries.shape))

    def gradient(
        self, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Return the entrywise accumulation of the weights."""
        grad = np.zeros(self._entries.shape)
        np.add.at(grad, (rows, cols), weights)
        grad[-1, -1] = 0.0
        return grad.ravel()

    def is_symmetric(self) -> bool:
        """Return if the matrix is symmetric."""
        return bool(np.array_equal(self._entries, self._entries.T))


class EmbeddingCostModel(CostModel):
    """Class for representing costs as distances between label embeddings.

    Column u of A is the vector a(x_u); the gap sits at the origin, so
    c_A(x, y) = ||a(x) - a(y)|| is a pseudo-metric for every A.
    """

    def __init__(self, alphabet: Alphabet, embedding: np.ndarray) -> None:
        """Initialize class."""
        super().__init__(alphabet)
        embedding = np.array(embedding, dtype=float)
        if embedding.ndim != 2 or embedding.shape[1] != alphabet.size:
            raise CostModelError(
                f"Embedding must have {alphabet.size} columns, got shape {embedding.shape}"
            )
        if not np.all(np.isfinite(embedding)):
            raise CostModelError("Embedding has non-finite entries")
        embedding.flags.writeable = False
        self._embedding = embedding
        self._ext = np.hstack([embedding, np.zeros((embedding.shape[0], 1))])

    @property
    def embedding(self) -> np.ndarray:
        """Return the read-only V x U embedding matrix."""
        return self._embedding

    @property
    def dim(self) -> int:
        """Return embedding dimensionality V."""
        return self._embedding.shape[0]

    def vector(self, x: int | str) -> np.ndarray:
        """Return a(x), the origin for the gap."""
        idx = self.alphabet.index(x) if isinstance(x, str) else x
        return self._ext[:, idx].copy()

    def pair_costs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Return Euclidean distances between embeddings."""
        return np.linalg.norm(self._ext[:, a] - self._ext[:, b], axis=0)

    @property
    def params(self) -> np.ndarray:
        """Return the flattened embedding."""
        return self._embedding.ravel().copy()

    def with_params(self, params: np.ndarray) -> EmbeddingCostModel:
        """Return an embedding model with other vectors."""
        return EmbeddingCostModel(self.alphabet, np.reshape(params, self._embedding.shape))

    def gradient(
        self, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Return the gradient with respect to A, gap column dropped."""
        diff = self._ext[:, rows] - self._ext[:, cols]
        norms = np.linalg.norm(diff, axis=0)
        scale = np.divide(
            weights, norms, out=np.zeros_like(norms), where=norms >= NORM_EPS
        )
        step = diff * scale
        grad = np.zeros((self._ext.shape[1], self.dim))
        np.add.at(grad, rows, step.T)
        np.add.at(grad, cols, -step.T)
        return grad[: self.size].T.ravel()


class TransformedCosineCostModel(CostModel):
    """Class for representing cosine costs over linearly transformed word vectors.

    c(x, y) = 1/2 - 1/2 cos(Ω b(x), Ω b(y)); insertions and deletions cost a
    constant 1/2.
    """

    def __init__(
        self, alphabet: Alphabet, base: np.ndarray, omega: np.ndarray | None = None
    ) -> None:
        """Initialize class."""
        super().__init__(alphabet)
        base = np.array(base, dtype=float)
        if base.ndim != 2 or base.shape[1] != alphabet.size:
            raise CostModelError(
                f"Base vectors must have {alphabet.size} columns, got shape {base.shape}"
            )
        omega = np.eye(base.shape[0]) if omega is None else np.array(omega, dtype=float)
        if omega.shape != (base.shape[0], base.shape[0]):
            raise CostModelError(f"Omega must be square of size {base.shape[0]}")
        if not (np.all(np.isfinite(base)) and np.all(np.isfinite(omega))):
            raise CostModelError("Non-finite base vectors or transform")
        base.flags.writeable = False
        omega.flags.writeable = False
        self._base = base
        self._omega = omega

        transformed = omega @ base
        norms = np.linalg.norm(transformed, axis=0)
        self._norms = norms
        self._unit = np.divide(
            transformed, norms, out=np.zeros_like(transformed), where=norms >= NORM_EPS
        )
        self._degenerate = norms < NORM_EPS

    @property
    def base(self) -> np.ndarray:
        """Return the fixed D x U base vectors."""
        return self._base

    @property
    def omega(self) -> np.ndarray:
        """Return the learnable transform."""
        return self._omega

    def _check(self, idx: np.ndarray) -> None:
        labels = idx[idx < self.size]
        bad = labels[self._degenerate[labels]]
        if bad.size:
            name = self.alphabet.label(int(bad.flat[0]))
            raise CostModelError(f"Transformed vector of label '{name}' is degenerate")

    def pair_costs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Return cosine costs, 1/2 against the gap."""
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        self._check(a)
        self._check(b)
        gap = self.size
        ua = np.where(a == gap, 0, a)
        ub = np.where(b == gap, 0, b)
        cos = np.einsum("v...,v...->...", self._unit[:, ua], self._unit[:, ub])
        cost = 0.5 - 0.5 * cos
        cost = np.where((a == gap) | (b == gap), COSINE_GAP_COST, cost)
        return np.where(a == b, 0.0, cost)

    @property
    def params(self) -> np.ndarray:
        """Return the flattened transform."""
        return self._omega.ravel().copy()

    def with_params(self, params: np.ndarray) -> TransformedCosineCostModel:
        """Return a cosine model with another transform."""
        return TransformedCosineCostModel(
            self.alphabet, self._base, np.reshape(params, self._omega.shape)
        )

    def gradient(
        self, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Return the gradient with respect to Ω."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        weights = np.asarray(weights, dtype=float)
        # Gap costs are constant and equal labels always cost 0
        keep = (rows != self.size) & (cols != self.size) & (rows != cols)
        rows, cols, weights = rows[keep], cols[keep], weights[keep]
        self._check(rows)
        self._check(cols)
        ua = self._unit[:, rows]
        ub = self._unit[:, cols]
        cos = np.sum(ua * ub, axis=0)
        ga = (ub - cos * ua) / self._norms[rows] * (-0.5 * weights)
        gb = (ua - cos * ub) / self._norms[cols] * (-0.5 * weights)
        grad = ga @ self._base[:, rows].T + gb @ self._base[:, cols].T
        return grad.ravel()


def simplex_init(alphabet: Alphabet) -> EmbeddingCostModel:
    """Return the embedding whose labels and the origin form a unit simplex.

    The induced costs are 0 between equal labels and 1 otherwise, including
    insertions and deletions.
    """
    u = alphabet.size
    if u < 1:
        raise CostModelError("Alphabet must not be empty")
    # Vertices (e_u - e_gap) / sqrt(2) in R^(U+1), gap vertex moved to the origin
    vertices = np.vstack([np.eye(u), -np.ones((1, u))]) / np.sqrt(2.0)
    _, r = scipy.linalg.qr(vertices, mode="economic")
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return EmbeddingCostModel(alphabet, signs[:, None] * r)


def embedding_cost_gradient(
    model: EmbeddingCostModel, x: int | str, y: int | str
) -> tuple[np.ndarray, np.ndarray]:
    """Return the gradients of c_A(x, y) with respect to a(x) and a(y)."""
    diff = model.vector(x) - model.vector(y)
    norm = float(np.linalg.norm(diff))
    if norm < NORM_EPS:
        zero = np.zeros(model.dim)
        return zero, zero.copy()
    return diff / norm, -diff / norm


def cosine_cost_gradient(
    model: TransformedCosineCostModel, x: int | str, y: int | str
) -> np.ndarray:
    """Return the gradient of c_Ω(x, y) with respect to Ω."""
    a = model.alphabet.index(x) if isinstance(x, str) else x
    b = model.alphabet.index(y) if isinstance(y, str) else y
    grad = model.gradient(np.array([a]), np.array([b]), np.array([1.0]))
    return grad.reshape(model.omega.shape)


@dataclass
class PseudoMetricReport:
    """Violations of the pseudo-metric axioms found in a cost function."""

    negative: list[tuple[str, str]] = field(default_factory=list)
    asymmetric: list[tuple[str, str]] = field(default_factory=list)
    self_distance: list[str] = field(default_factory=list)
    triangle: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Return if no violation was found."""
        return not (self.negative or self.asymmetric or self.self_distance or self.triangle)


def validate_pseudometric(
    c: CostModel, trials: int | None = None, *, tol: float = 1e-9, seed: int = 0
) -> PseudoMetricReport:
    """Check a cost function against the pseudo-metric axioms over X ∪ {−}.

    Triangle inequalities are checked over all triples unless `trials` is
    given, in which case that many random triples are drawn.
    """
    mat = c.matrix()
    n = mat.shape[0]
    name = c.alphabet.label
    report = PseudoMetricReport()

    for i in range(n):
        if abs(mat[i, i]) > tol:
            report.self_distance.append(name(i))
    for i, j in zip(*np.nonzero(mat < -tol), strict=True):
        report.negative.append((name(int(i)), name(int(j))))
    for i, j in zip(*np.nonzero(np.abs(mat - mat.T) > tol), strict=True):
        if i < j:
            report.asymmetric.append((name(int(i)), name(int(j))))

    if trials is None:
        # c(x, z) <= c(x, y) + c(y, z), vectorized over z
        for x, y in product(range(n), repeat=2):
            bad = np.nonzero(mat[x] > mat[x, y] + mat[y] + tol)[0]
            report.triangle.extend((name(x), name(y), name(int(z))) for z in bad)
    else:
        rng = np.random.default_rng(seed)
        triples = rng.integers(0, n, size=(trials, 3))
        for x, y, z in triples:
            if mat[x, z] > mat[x, y] + mat[y, z] + tol:
                report.triangle.append((name(int(x)), name(int(y)), name(int(z))))

    if not report.ok:
        _LOGGER.debug(
            "Pseudo-metric violations: %d triangle, %d asymmetric",
            len(report.triangle),
            len(report.asymmetric),
        )
    return report


def closure(c: CostModel) -> np.ndarray:
    """Return the cheapest cost of editing each label into each other via chains of edits."""
    mat = c.matrix()
    for k in range(mat.shape[0]):
        mat = np.minimum(mat, mat[:, k : k + 1] + mat[k : k + 1, :])
    return mat


def reduce_word_vectors(
    base: np.ndarray, variance: float = DEFAULT_VARIANCE
) -> np.ndarray:
    """Project D x U word vectors onto their leading principal directions.

    The basis is found on centered vectors; the vectors themselves are
    projected uncentered so that cosine geometry around the origin is kept.
    """
    result = pca_project(base.T, mode="variance", variance=variance)
    return (base.T @ result.components.T).T


def cosine_init(
    alphabet: Alphabet, base: np.ndarray, variance: float = DEFAULT_VARIANCE
) -> TransformedCosineCostModel:
    """Return a cosine model over PCA reduced word vectors with Ω = identity."""
    reduced = reduce_word_vectors(base, variance)
    _LOGGER.debug("Reduced word vectors from %d to %d dimensions", base.shape[0], reduced.shape[0])
    return TransformedCosineCostModel(alphabet, reduced)


def load_word_vectors(
    path: str | Path, alphabet: Alphabet
) -> tuple[np.ndarray, list[str]]:
    """Load `token v1 ... vD` lines for the alphabet tokens.

    Returns the D x U base matrix in alphabet order and the tokens that were
    missing; those get the mean vector of the file.
    """
    found: dict[str, np.ndarray] = {}
    total = None
    count = 0
    dim = None
    with Path(path).open(encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            try:
                vec = np.asarray(values, dtype=float)
            except ValueError as err:
                raise DatasetError("Malformed word vector", lineno) from err
            if vec.size == 0 or (dim is not None and vec.size != dim):
                raise DatasetError("Inconsistent word vector dimension", lineno)
            dim = vec.size
            total = vec.copy() if total is None else total + vec
            count += 1
            if token in alphabet:
                found[token] = vec

    if total is None or dim is None:
        raise DatasetError(f"No word vectors in {path}")

    mean = total / count
    missing = [label for label in alphabet.labels if label not in found]
    if missing:
        _LOGGER.warning(
            "%d of %d tokens have no word vector, using the mean vector",
            len(missing),
            alphabet.size,
        )
    base = np.column_stack([found.get(label, mean) for label in alphabet.labels])
    return base, missing


def read_cost_matrix(path: str | Path) -> ExplicitCostMatrix:
    """Read a cost matrix CSV with a header row of labels, gap last."""
    with Path(path).open(encoding="utf-8", newline="") as fp:
        rows = [row for row in csv.reader(fp) if row]
    if not rows:
        raise DatasetError(f"Empty cost matrix file {path}")
    header = [h.strip() for h in rows[0]]
    if not header or header[-1] != GAP:
        raise DatasetError("Cost matrix header must end with the gap token", 1)
    alphabet = Alphabet(header[:-1])
    try:
        entries = np.asarray([[float(v) for v in row] for row in rows[1:]])
    except ValueError as err:
        raise DatasetError(f"Malformed cost matrix {path}") from err
    return ExplicitCostMatrix(alphabet, entries)


def write_cost_matrix(c: CostModel, path: str | Path) -> None:
    """Write the materialized cost matrix as CSV."""
    header = [*c.alphabet.labels, GAP]
    with Path(path).open("w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        writer.writerows([repr(float(v)) for v in row] for row in c.matrix())


def read_embedding(path: str | Path) -> EmbeddingCostModel:
    """Read an embedding CSV with one `label,v1,...,vV` row per label."""
    labels = []
    vectors = []
    with Path(path).open(encoding="utf-8", newline="") as fp:
        for lineno, row in enumerate(csv.reader(fp), start=1):
            if not row:
                continue
            try:
                vectors.append([float(v) for v in row[1:]])
            except ValueError as err:
                raise DatasetError("Malformed embedding row", lineno) from err
            labels.append(row[0].strip())
    if len({len(v) for v in vectors}) != 1:
        raise DatasetError(f"Embedding rows of {path} differ in length")
    return EmbeddingCostModel(Alphabet(labels), np.asarray(vectors).T)


def write_embedding(model: EmbeddingCostModel, path: str | Path) -> None:
    """Write the embedding as CSV, the gap row omitted."""
    with Path(path).open("w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        for label, column in zip(model.alphabet.labels, model.embedding.T, strict=True):
            writer.writerow([label, *(repr(float(v)) for v in column)])
