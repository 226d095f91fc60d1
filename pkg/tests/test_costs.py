"""Tests for costs module."""

import logging

import numpy as np
import pytest

from tedlearn.costs import (
    EmbeddingCostModel,
    ExplicitCostMatrix,
    TransformedCosineCostModel,
    closure,
    cosine_cost_gradient,
    cosine_init,
    embedding_cost_gradient,
    load_word_vectors,
    read_cost_matrix,
    read_embedding,
    reduce_word_vectors,
    simplex_init,
    validate_pseudometric,
    write_cost_matrix,
    write_embedding,
)
from tedlearn.error import CostModelError, DatasetError
from tedlearn.trees import Alphabet

from . import finite_difference, random_costs


def _close(grad: np.ndarray, expected: np.ndarray, tol: float = 1e-5) -> bool:
    return np.linalg.norm(grad - expected) <= tol * max(1.0, float(np.linalg.norm(expected)))


@pytest.mark.parametrize("size", [1, 2, 5])
def test_simplex(size: int):
    """Test simplex embedding induces unit costs succeeds."""
    alphabet = Alphabet([f"l{i}" for i in range(size)])
    model = simplex_init(alphabet)
    assert model.dim == size
    unit = ExplicitCostMatrix.unit(alphabet)
    assert np.allclose(model.matrix(), unit.matrix(), atol=1e-12)
    assert np.allclose(model.vector("-"), 0.0)


def test_explicit_invalid(alphabet: Alphabet):
    """Test invalid cost matrices fail."""
    with pytest.raises(CostModelError):
        ExplicitCostMatrix(alphabet, np.zeros((3, 3)))
    entries = np.zeros((5, 5))
    entries[0, 1] = np.nan
    with pytest.raises(CostModelError):
        ExplicitCostMatrix(alphabet, entries)
    entries = np.zeros((5, 5))
    entries[-1, -1] = 1.0
    with pytest.raises(CostModelError):
        ExplicitCostMatrix(alphabet, entries)


def test_explicit_gradient(rng, alphabet: Alphabet):
    """Test matrix gradient accumulates weights per cell succeeds."""
    costs = random_costs(rng, alphabet)
    rows = np.array([0, 0, 4, 4])
    cols = np.array([1, 1, 2, 4])
    grad = costs.gradient(rows, cols, np.array([0.5, 0.25, 1.0, 3.0])).reshape(5, 5)
    assert grad[0, 1] == 0.75
    assert grad[4, 2] == 1.0
    assert grad[4, 4] == 0.0
    assert grad.sum() == 1.75
    assert costs.evaluate("a", "b") == costs.entries[0, 1]
    assert costs.evaluate(0, "-") == costs.entries[0, 4]


def test_embedding_cost_gradient():
    """Test embedding gradient points from a(y) to a(x) succeeds."""
    model = EmbeddingCostModel(Alphabet(("x", "y")), np.array([[1.0, 0.0], [0.0, 0.0]]))
    gx, gy = embedding_cost_gradient(model, "x", "y")
    assert np.allclose(gx, [1.0, 0.0])
    assert np.allclose(gy, [-1.0, 0.0])
    assert np.allclose(embedding_cost_gradient(model, "y", "-")[0], 0.0)
    assert model.evaluate("x", "-") == 1.0


@pytest.mark.parametrize("rng", range(20), indirect=True)
def test_embedding_gradient_fd(rng, alphabet: Alphabet):
    """Test embedding gradient matches finite differences."""
    model = EmbeddingCostModel(alphabet, rng.normal(size=(3, alphabet.size)))
    rows = rng.integers(0, alphabet.size + 1, size=12)
    cols = rng.integers(0, alphabet.size + 1, size=12)
    keep = rows != cols
    rows, cols = rows[keep], cols[keep]
    weights = rng.uniform(0.1, 1.0, size=len(rows))

    def value(params):
        return float(np.dot(weights, model.with_params(params).pair_costs(rows, cols)))

    grad = model.gradient(rows, cols, weights)
    assert _close(grad, finite_difference(value, model.params), 1e-6)


def test_embedding_invalid(alphabet: Alphabet):
    """Test invalid embeddings fail."""
    with pytest.raises(CostModelError):
        EmbeddingCostModel(alphabet, np.zeros((2, 3)))
    with pytest.raises(CostModelError):
        EmbeddingCostModel(alphabet, np.full((2, 4), np.inf))


def test_cosine_costs():
    """Test cosine costs of orthogonal and equal vectors succeed."""
    alphabet = Alphabet(("x", "y", "z"))
    base = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0]])
    model = TransformedCosineCostModel(alphabet, base)
    assert model.evaluate("x", "y") == pytest.approx(0.5)
    assert model.evaluate("x", "z") == pytest.approx(0.0)
    assert model.evaluate("x", "x") == 0.0
    assert model.evaluate("x", "-") == 0.5
    assert model.evaluate("-", "y") == 0.5
    assert model.evaluate("-", "-") == 0.0
    matrix = model.matrix()
    assert np.allclose(matrix, matrix.T)
    assert np.all((matrix >= 0.0) & (matrix <= 1.0))


def test_cosine_gradient_fd(rng, alphabet: Alphabet):
    """Test cosine gradient matches finite differences."""
    base = rng.normal(size=(3, alphabet.size))
    model = TransformedCosineCostModel(alphabet, base, rng.normal(size=(3, 3)))
    for x, y in [("a", "b"), ("c", "d"), ("b", "-")]:
        grad = cosine_cost_gradient(model, x, y)
        expected = finite_difference(
            lambda p, x=x, y=y: model.with_params(p).evaluate(x, y), model.params
        ).reshape(3, 3)
        assert _close(grad, expected)


def test_cosine_equal_labels(rng, alphabet: Alphabet):
    """Test equal labels give zero cost and zero gradient succeeds."""
    model = TransformedCosineCostModel(alphabet, rng.normal(size=(3, alphabet.size)))
    assert model.evaluate("a", "a") == 0.0
    assert np.allclose(cosine_cost_gradient(model, "a", "a"), 0.0)


def test_cosine_degenerate():
    """Test a degenerate transformed vector names its label."""
    base = np.array([[1.0, 0.0], [0.0, 0.0]])
    model = TransformedCosineCostModel(Alphabet(("x", "y")), base)
    with pytest.raises(CostModelError, match="'y'"):
        model.evaluate("x", "y")
    with pytest.raises(CostModelError):
        TransformedCosineCostModel(Alphabet(("x", "y")), base, np.eye(3))


def test_validate_pseudometric(alphabet: Alphabet, unit: ExplicitCostMatrix):
    """Test pseudo-metric validation reports violations."""
    assert validate_pseudometric(unit).ok

    entries = unit.matrix()
    entries[0, 1] = entries[1, 0] = 3.0
    report = validate_pseudometric(ExplicitCostMatrix(alphabet, entries))
    assert not report.ok
    assert ("a", "c", "b") in report.triangle
    assert not report.asymmetric

    entries = unit.matrix()
    entries[0, 1] = -1.0
    entries[2, 2] = 0.5
    report = validate_pseudometric(ExplicitCostMatrix(alphabet, entries))
    assert ("a", "b") in report.negative
    assert ("a", "b") in report.asymmetric
    assert report.self_distance == ["c"]


def test_validate_embeddings(rng, alphabet: Alphabet):
    """Test embedding costs are always pseudo-metrics."""
    for _ in range(100):
        model = EmbeddingCostModel(alphabet, rng.normal(size=(2, alphabet.size)))
        assert validate_pseudometric(model).ok
    assert validate_pseudometric(model, 50, seed=1).ok


def test_closure(alphabet: Alphabet, unit: ExplicitCostMatrix):
    """Test closure shortens costs through intermediate labels."""
    entries = unit.matrix()
    entries[0, 1] = 5.0
    mat = closure(ExplicitCostMatrix(alphabet, entries))
    assert mat[0, 1] == 2.0
    assert mat[1, 0] == 1.0


def test_cost_matrix_csv(rng, alphabet: Alphabet, tmp_path):
    """Test cost matrix CSV write and read succeed."""
    costs = random_costs(rng, alphabet)
    path = tmp_path / "costs.csv"
    write_cost_matrix(costs, path)
    loaded = read_cost_matrix(path)
    assert loaded.alphabet == alphabet
    assert np.array_equal(loaded.entries, costs.entries)

    path.write_text("a,b\n0,1\n1,0\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_cost_matrix(path)
    path.write_text("a,-\n0,x\n1,0\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_cost_matrix(path)


def test_embedding_csv(rng, alphabet: Alphabet, tmp_path):
    """Test embedding CSV write and read succeed."""
    model = EmbeddingCostModel(alphabet, rng.normal(size=(2, alphabet.size)))
    path = tmp_path / "embedding.csv"
    write_embedding(model, path)
    loaded = read_embedding(path)
    assert loaded.alphabet == alphabet
    assert np.array_equal(loaded.embedding, model.embedding)

    path.write_text("a,1,2\nb,1\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_embedding(path)


def test_load_word_vectors(tmp_path, caplog):
    """Test word vectors are read in alphabet order with a mean fallback."""
    path = tmp_path / "vectors.txt"
    path.write_text("good 1 0\nbad 0 1\nthe 2 2\nfilm 1 1\n", encoding="utf-8")
    base, missing = load_word_vectors(path, Alphabet(("the", "good", "bad")))
    assert not missing
    assert np.array_equal(base, [[2.0, 1.0, 0.0], [2.0, 0.0, 1.0]])

    with caplog.at_level(logging.WARNING):
        base, missing = load_word_vectors(path, Alphabet(("good", "plot")))
    assert missing == ["plot"]
    assert np.allclose(base[:, 1], [1.0, 1.0])
    assert "no word vector" in caplog.text


@pytest.mark.parametrize("text", ["a 1 2\nb 1\n", "a 1 x\n", ""])
def test_load_word_vectors_invalid(tmp_path, text: str):
    """Test malformed word vector files fail."""
    path = tmp_path / "vectors.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(DatasetError):
        load_word_vectors(path, Alphabet(("a",)))


def test_cosine_init():
    """Test word vectors on a plane reduce to two dimensions."""
    alphabet = Alphabet([f"w{i}" for i in range(10)])
    plane = np.array(
        [
            [1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0, -1.0],
            [0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
        ]
    )
    base = np.vstack([plane, plane[0] + plane[1], np.zeros(10)])
    reduced = reduce_word_vectors(base)
    assert reduced.shape == (2, 10)
    model = cosine_init(alphabet, base)
    assert model.omega.shape == (2, 2)
    assert np.array_equal(model.omega, np.eye(2))
