"""pytest tests."""

from __future__ import annotations

import numpy as np

from tedlearn.costs import ExplicitCostMatrix
from tedlearn.trees import Alphabet, LabeledDataset, Tree

LABELS = ("a", "b", "c", "d")
SEED = 1234
FD_STEP = 1e-6
FD_TOL = 1e-4


def random_tree(rng: np.random.Generator, size: int, labels: int = len(LABELS)) -> Tree:
    """Create a random recursive tree."""
    nodes: list[list[int]] = [[int(rng.integers(labels))]]
    for _ in range(size - 1):
        nodes[int(rng.integers(len(nodes)))].append(len(nodes))
        nodes.append([int(rng.integers(labels))])

    def build(idx: int) -> Tree:
        label, *children = nodes[idx]
        return Tree(label, tuple(build(c) for c in children))

    return build(0)


def random_dataset(
    rng: np.random.Generator, per_class: int = 4, classes: int = 2
) -> LabeledDataset:
    """Create a dataset of small random trees over LABELS."""
    trees = tuple(
        random_tree(rng, int(rng.integers(2, 7))) for _ in range(per_class * classes)
    )
    return LabeledDataset(Alphabet(LABELS), trees, np.repeat(np.arange(classes), per_class))


def random_costs(
    rng: np.random.Generator, alphabet: Alphabet, low: float = 0.1, high: float = 2.0
) -> ExplicitCostMatrix:
    """Create a random non-negative cost matrix with zero diagonal."""
    n = alphabet.size + 1
    entries = rng.uniform(low, high, size=(n, n))
    np.fill_diagonal(entries, 0.0)
    return ExplicitCostMatrix(alphabet, entries)


def integer_costs(rng: np.random.Generator, alphabet: Alphabet) -> ExplicitCostMatrix:
    """Create a random cost matrix with small integer entries, so optima tie often."""
    n = alphabet.size + 1
    entries = rng.integers(1, 3, size=(n, n)).astype(float)
    np.fill_diagonal(entries, 0.0)
    return ExplicitCostMatrix(alphabet, entries)


def finite_difference(func, params: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Return the central difference gradient of a scalar function."""
    grad = np.zeros_like(params)
    for k in range(params.size):
        shift = np.zeros_like(params)
        shift[k] = step
        grad[k] = (func(params + shift) - func(params - shift)) / (2.0 * step)
    return grad


def write_word_vectors(
    path, alphabet: Alphabet, rng: np.random.Generator, dim: int = 4
) -> None:
    """Write one random `token v1 ... vD` line per alphabet label."""
    lines = [
        " ".join([label, *(repr(float(v)) for v in rng.normal(size=dim))])
        for label in alphabet.labels
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
