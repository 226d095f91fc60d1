"""Module for generating labeled tree datasets."""

from __future__ import annotations

import numpy as np

from .const import STRINGS_ALPHABET, STRINGS_LENGTH, STRINGS_PER_CLASS
from .trees import Alphabet, LabeledDataset, Tree, chain_tree

# Position of the c or d symbol (0-based) per class
STRINGS_MARKER = (6, 5)

SYNTHETIC_ALPHABET = ("a", "b", "c", "d", "e")
SYNTHETIC_PER_CLASS = 20


def generate_strings(seed: int, *, per_class: int = STRINGS_PER_CLASS) -> LabeledDataset:
    """Return the two-class Strings data as chain trees.

    Strings have 12 symbols: a or b everywhere except one c or d, which
    sits at the 7th symbol in class 0 and at the 6th in class 1.
    """
    alphabet = Alphabet(STRINGS_ALPHABET)
    rng = np.random.default_rng(seed)
    a, b, c, d = (alphabet.index(s) for s in STRINGS_ALPHABET)
    trees = []
    labels = []
    for cls, marker in enumerate(STRINGS_MARKER):
        for _ in range(per_class):
            symbols = rng.choice([a, b], size=STRINGS_LENGTH)
            symbols[marker] = rng.choice([c, d])
            trees.append(chain_tree([int(s) for s in symbols]))
            labels.append(cls)
    return LabeledDataset(alphabet, tuple(trees), np.asarray(labels))


def _random_tree(rng: np.random.Generator, size: int, labels: list[int]) -> list[list[int]]:
    """Return node labels and child lists of a random recursive tree."""
    nodes = [[int(rng.choice(labels))]]
    for _ in range(size - 1):
        parent = int(rng.integers(len(nodes)))
        nodes[parent].append(len(nodes))
        nodes.append([int(rng.choice(labels))])
    return nodes


def _build(nodes: list[list[int]], idx: int = 0) -> Tree:
    label, *children = nodes[idx]
    return Tree(label, tuple(_build(nodes, c) for c in children))


def generate_synthetic_trees(
    seed: int, *, per_class: int = SYNTHETIC_PER_CLASS
) -> LabeledDataset:
    """Return a three-class dataset of branching trees.

    Trees have 5 to 8 nodes labeled a or b; one leaf of every tree is
    relabeled c, d or e according to its class.
    """
    alphabet = Alphabet(SYNTHETIC_ALPHABET)
    rng = np.random.default_rng(seed)
    filler = [alphabet.index("a"), alphabet.index("b")]
    markers = [alphabet.index(s) for s in ("c", "d", "e")]
    trees = []
    labels = []
    for cls, marker in enumerate(markers):
        for _ in range(per_class):
            nodes = _random_tree(rng, int(rng.integers(5, 9)), filler)
            leaves = [i for i, node in enumerate(nodes) if len(node) == 1]
            nodes[int(rng.choice(leaves))][0] = marker
            trees.append(_build(nodes))
            labels.append(cls)
    return LabeledDataset(alphabet, tuple(trees), np.asarray(labels))
