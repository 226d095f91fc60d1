"""Module for representing ordered labeled trees and labeled tree datasets."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
import json
import logging
from pathlib import Path

import numpy as np

from .const import GAP
from .error import DatasetError, TreeParseError

_LOGGER = logging.getLogger(__name__)

_RESERVED = "(),"


class Alphabet:
    """Class for representing a finite label set plus the reserved gap symbol."""

    def __init__(self, labels: Iterable[str]) -> None:
        """Initialize class."""
        self._labels: tuple[str, ...] = tuple(labels)
        self._index: dict[str, int] = {}
        for i, label in enumerate(self._labels):
            if not label or label != label.strip() or any(c in label for c in _RESERVED):
                raise DatasetError(f"Invalid label '{label}'")
            if label == GAP:
                raise DatasetError(f"Label '{GAP}' is reserved for the gap")
            if label in self._index:
                raise DatasetError(f"Duplicate label '{label}'")
            self._index[label] = i

    @property
    def labels(self) -> tuple[str, ...]:
        """Return labels in index order."""
        return self._labels

    @property
    def size(self) -> int:
        """Return number of labels U."""
        return len(self._labels)

    @property
    def gap(self) -> int:
        """Return index of the gap symbol."""
        return len(self._labels)

    def index(self, label: str) -> int:
        """Return index of a label, the gap token maps to the gap index."""
        if label == GAP:
            return self.gap
        try:
            return self._index[label]
        except KeyError as err:
            raise DatasetError(f"Unknown label '{label}'") from err

    def label(self, index: int) -> str:
        """Return label of an index, the gap index maps to the gap token."""
        if index == self.gap:
            return GAP
        return self._labels[index]

    def __contains__(self, label: object) -> bool:
        """Return if label belongs to the alphabet."""
        return label in self._index

    def __len__(self) -> int:
        """Return number of labels U."""
        return len(self._labels)

    def __eq__(self, other: object) -> bool:
        """Return if both alphabets hold the same labels in the same order."""
        return isinstance(other, Alphabet) and self._labels == other._labels

    def __hash__(self) -> int:
        """Return hash."""
        return hash(self._labels)

    def __repr__(self) -> str:
        """Return representation."""
        return f"Alphabet({list(self._labels)!r})"


@dataclass(frozen=True)
class Tree:
    """Ordered tree with an alphabet index as label and an ordered child list."""

    label: int
    children: tuple[Tree, ...] = ()

    @cached_property
    def size(self) -> int:
        """Return number of nodes."""
        return len(self.view)

    @cached_property
    def view(self) -> PreorderView:
        """Return the cached pre-order view."""
        return PreorderView(self)


def chain_tree(labels: Sequence[int]) -> Tree:
    """Return the chain tree l1(l2(...(ln))) of a label sequence."""
    if not labels:
        raise TreeParseError("Empty label sequence", 0)
    node = Tree(labels[-1])
    for label in reversed(labels[:-1]):
        node = Tree(label, (node,))
    return node


class PreorderView:
    """Class for representing a tree as flat node arrays.

    Nodes are numbered in pre-order. The post-order arrays drive the forest
    dynamic program: every forest it visits is a contiguous post-order span
    that starts at the leftmost leaf of some node.
    """

    def __init__(self, tree: Tree) -> None:
        """Initialize class."""
        labels: list[int] = []
        parents: list[int] = []
        ranks: list[int] = []
        depths: list[int] = []
        stack: list[tuple[Tree, int, int, int]] = [(tree, -1, 0, 0)]
        while stack:
            node, parent, rank, depth = stack.pop()
            idx = len(labels)
            labels.append(node.label)
            parents.append(parent)
            ranks.append(rank)
            depths.append(depth)
            for r in range(len(node.children) - 1, -1, -1):
                stack.append((node.children[r], idx, r, depth + 1))

        n = len(labels)
        sizes = [1] * n
        for i in range(n - 1, 0, -1):
            sizes[parents[i]] += sizes[i]

        post_of_pre = [i + sizes[i] - 1 - depths[i] for i in range(n)]
        pre_of_post = [0] * n
        for i, p in enumerate(post_of_pre):
            pre_of_post[p] = i

        self._labels = _frozen(labels)
        self._parents = _frozen(parents)
        self._ranks = _frozen(ranks)
        self._sizes = _frozen(sizes)
        self._post_of_pre = _frozen(post_of_pre)
        self._pre_of_post = _frozen(pre_of_post)
        self._post_labels = _frozen([labels[pre_of_post[p]] for p in range(n)])
        self._post_lml = _frozen(
            [p - sizes[pre_of_post[p]] + 1 for p in range(n)]
        )
        self._shape = tuple(parents)

        ends: dict[int, int] = {}
        for p in range(n):
            ends[int(self._post_lml[p])] = p
        self._span_ends = ends

    def __len__(self) -> int:
        """Return number of nodes."""
        return len(self._labels)

    @property
    def labels(self) -> np.ndarray:
        """Return label index per pre-order node."""
        return self._labels

    @property
    def parents(self) -> np.ndarray:
        """Return parent pre-order index per node, -1 for the root."""
        return self._parents

    @property
    def child_ranks(self) -> np.ndarray:
        """Return position of each node among its siblings."""
        return self._ranks

    @property
    def sizes(self) -> np.ndarray:
        """Return subtree size per pre-order node."""
        return self._sizes

    @property
    def post_of_pre(self) -> np.ndarray:
        """Return post-order index of each pre-order node."""
        return self._post_of_pre

    @property
    def pre_of_post(self) -> np.ndarray:
        """Return pre-order index of each post-order node."""
        return self._pre_of_post

    @property
    def post_labels(self) -> np.ndarray:
        """Return label index per post-order node."""
        return self._post_labels

    @property
    def post_lml(self) -> np.ndarray:
        """Return post-order index of the leftmost leaf below each post-order node."""
        return self._post_lml

    @property
    def span_ends(self) -> dict[int, int]:
        """Return the last post-order node sharing each leftmost leaf."""
        return self._span_ends

    @property
    def shape(self) -> tuple[int, ...]:
        """Return a hashable key that is equal for equally shaped trees."""
        return self._shape

    def is_ancestor(self, i: int, k: int) -> bool:
        """Return if pre-order node i is a proper ancestor of pre-order node k."""
        return i < k < i + int(self._sizes[i])


def _frozen(values: list[int]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.intp)
    arr.flags.writeable = False
    return arr


def preorder(t: Tree) -> PreorderView:
    """Return the pre-order view of a tree."""
    return t.view


def iter_nodes(t: Tree) -> list[Tree]:
    """Return the nodes of a tree root first, children left to right."""
    nodes: list[Tree] = []
    stack = [t]
    while stack:
        node = stack.pop()
        nodes.append(node)
        stack.extend(reversed(node.children))
    return nodes


def parse_bracket(text: str, alphabet: Alphabet) -> Tree:
    """Parse a tree in bracket notation `label(child,child,...)`."""
    pos = 0
    length = len(text)

    def skip() -> None:
        nonlocal pos
        while pos < length and text[pos].isspace():
            pos += 1

    def read_label() -> int:
        nonlocal pos
        skip()
        start = pos
        while pos < length and text[pos] not in _RESERVED:
            pos += 1
        label = text[start:pos].strip()
        if not label:
            raise TreeParseError("Expected label", start)
        if label not in alphabet:
            raise TreeParseError(f"Unknown label '{label}'", start)
        return alphabet.index(label)

    if not text.strip():
        raise TreeParseError("Empty input", 0)

    # Each frame holds a label and the children collected so far
    stack: list[tuple[int, list[Tree]]] = []
    root: Tree | None = None
    label = read_label()
    while True:
        skip()
        if pos < length and text[pos] == "(":
            stack.append((label, []))
            pos += 1
            label = read_label()
            continue

        node = Tree(label)
        while True:
            skip()
            if not stack:
                root = node
                break
            stack[-1][1].append(node)
            if pos >= length:
                raise TreeParseError("Unbalanced brackets", pos)
            if text[pos] == ",":
                pos += 1
                break
            if text[pos] == ")":
                pos += 1
                parent_label, children = stack.pop()
                node = Tree(parent_label, tuple(children))
                continue
            raise TreeParseError(f"Unexpected '{text[pos]}'", pos)

        if root is not None:
            break
        label = read_label()

    skip()
    if pos != length:
        raise TreeParseError(f"Unexpected '{text[pos]}'", pos)
    return root


def serialize_bracket(t: Tree, alphabet: Alphabet) -> str:
    """Return the canonical bracket notation of a tree."""
    out: list[str] = []
    # Either a node to open or a literal token to emit
    stack: list[Tree | str] = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        out.append(alphabet.label(item.label))
        if item.children:
            out.append("(")
            stack.append(")")
            for i in range(len(item.children) - 1, -1, -1):
                stack.append(item.children[i])
                if i:
                    stack.append(",")
    return "".join(out)


def read_tree_corpus(path: str | Path, alphabet: Alphabet) -> list[Tree]:
    """Read one bracket notation tree per non-empty line."""
    trees = []
    with Path(path).open(encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                trees.append(parse_bracket(line, alphabet))
            except TreeParseError as err:
                raise DatasetError(str(err), lineno) from err
    return trees


@dataclass(frozen=True)
class LabeledDataset:
    """Trees with integer class labels over one alphabet."""

    alphabet: Alphabet
    trees: tuple[Tree, ...]
    labels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        """Validate dataset."""
        labels = np.asarray(self.labels, dtype=np.intp)
        if labels.ndim != 1 or len(labels) != len(self.trees):
            raise DatasetError("Need exactly one label per tree")
        if len(labels) and labels.min() < 0:
            raise DatasetError("Class labels must be non-negative")
        for t in self.trees:
            if int(t.view.labels.max()) >= self.alphabet.size:
                raise DatasetError("Tree label outside of alphabet")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        """Return number of trees."""
        return len(self.trees)

    @property
    def classes(self) -> np.ndarray:
        """Return sorted distinct class ids."""
        return np.unique(self.labels)

    def subset(self, indices: Sequence[int] | np.ndarray) -> LabeledDataset:
        """Return the dataset restricted to some indices."""
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(
            self.alphabet, tuple(self.trees[i] for i in idx), self.labels[idx]
        )


def load_dataset(path: str | Path) -> LabeledDataset:
    """Load a JSON dataset with fields alphabet, trees and labels."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        alphabet = Alphabet(data["alphabet"])
        raw_trees = data["trees"]
        labels = [int(v) for v in data["labels"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        raise DatasetError(f"Invalid dataset file {path}") from err

    trees = []
    for i, text in enumerate(raw_trees):
        try:
            trees.append(parse_bracket(text, alphabet))
        except TreeParseError as err:
            raise DatasetError(f"Tree {i}: {err}") from err
    _LOGGER.debug("Loaded %d trees over %d labels from %s", len(trees), len(alphabet), path)
    return LabeledDataset(alphabet, tuple(trees), np.asarray(labels))


def save_dataset(dataset: LabeledDataset, path: str | Path) -> None:
    """Save a dataset as JSON."""
    data = {
        "alphabet": list(dataset.alphabet.labels),
        "trees": [serialize_bracket(t, dataset.alphabet) for t in dataset.trees],
        "labels": [int(v) for v in dataset.labels],
    }
    Path(path).write_text(json.dumps(data, indent=1), encoding="utf-8")
