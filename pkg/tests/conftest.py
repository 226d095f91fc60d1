"""pytest fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from tedlearn.costs import ExplicitCostMatrix, simplex_init
from tedlearn.datasets import generate_strings, generate_synthetic_trees
from tedlearn.trees import Alphabet

from . import LABELS, SEED


def pytest_addoption(parser):
    """Add option to run slow tests."""
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless asked for."""
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(name="rng")
def fixture_rng(request):
    """Return a seeded random generator."""
    seed = request.param if hasattr(request, "param") else SEED
    return np.random.default_rng(seed)


@pytest.fixture(name="alphabet")
def fixture_alphabet(request):
    """Return an alphabet."""
    return Alphabet(request.param if hasattr(request, "param") else LABELS)


@pytest.fixture(name="unit")
def fixture_unit_costs(alphabet: Alphabet):
    """Return unit costs."""
    return ExplicitCostMatrix.unit(alphabet)


@pytest.fixture(name="simplex")
def fixture_simplex(alphabet: Alphabet):
    """Return the simplex embedding."""
    return simplex_init(alphabet)


@pytest.fixture(name="strings")
def fixture_strings(request):
    """Return a small Strings dataset."""
    fixture = {"seed": SEED, "per_class": 6}
    if hasattr(request, "param"):
        fixture.update(request.param)
    return generate_strings(fixture["seed"], per_class=fixture["per_class"])


@pytest.fixture(name="synthetic")
def fixture_synthetic(request):
    """Return a small three-class dataset."""
    per_class = request.param if hasattr(request, "param") else 5
    return generate_synthetic_trees(SEED, per_class=per_class)
