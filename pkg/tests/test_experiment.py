"""Tests for experiment module."""

import json

import numpy as np
import pytest

from tedlearn.const import GOODNESS, KNN, MGLVQ
from tedlearn.costs import EmbeddingCostModel, TransformedCosineCostModel
from tedlearn.datasets import generate_strings, generate_synthetic_trees
from tedlearn.error import DatasetError, TedLearnError
from tedlearn.experiment import (
    ExperimentConfig,
    run_experiment,
    stratified_splits,
    summarize,
    write_report,
)
from tedlearn.trees import LabeledDataset

from . import write_word_vectors

SMALL = {
    "outer_folds": 2,
    "inner_folds": 2,
    "prototype_range": (1, 2),
    "neighbor_range": (1, 3),
    "lambda_range": (0.01, 1.0),
    "beta_scale_range": (1e-4, 1e-3),
    "grid_points": 2,
    "budget": 5,
    "outer_limit": 2,
    "iterations": 100,
}


def _check_folds(reports, size: int):
    seen = np.concatenate([r.test_index for r in reports])
    assert sorted(seen.tolist()) == list(range(size))
    for report in reports:
        assert not np.intersect1d(report.train_index, report.test_index).size
        assert len(report.train_index) + len(report.test_index) == size
        for error in report.errors.values():
            assert 0.0 <= error <= 1.0


def test_config_from_file(tmp_path):
    """Test config files with overrides succeed."""
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {"seed": 3, "method": "bedl", "prototype_range": [1, 4], "word_vectors": "v.txt"}
        )
    )
    config = ExperimentConfig.from_file(path, method="gesl", outer_folds=None)
    assert config.seed == 3
    assert config.method == "gesl"
    assert config.prototype_grid == [1, 2, 3, 4]
    assert config.outer_folds == 20
    assert config.word_vectors == "v.txt"
    assert config.with_overrides(seed=7, method=None).seed == 7


def test_config_grids():
    """Test log-spaced grids include both bounds."""
    config = ExperimentConfig(seed=1)
    assert config.lambda_grid[0] == pytest.approx(1e-5)
    assert config.lambda_grid[-1] == pytest.approx(10.0)
    assert len(config.beta_scale_grid) == 5
    assert config.neighbor_grid == list(range(1, 16))


@pytest.mark.parametrize(
    "data",
    [{"method": "bedl"}, {"seed": 1, "colour": "red"}, {"seed": 1, "method": "other"}],
)
def test_config_invalid(tmp_path, data):
    """Test incomplete or unknown config fields fail."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    with pytest.raises(TedLearnError):
        ExperimentConfig.from_file(path)


def test_config_invalid_json(tmp_path):
    """Test malformed config files fail."""
    path = tmp_path / "config.json"
    path.write_text("{seed: 1")
    with pytest.raises(TedLearnError):
        ExperimentConfig.from_file(path)
    with pytest.raises(TedLearnError):
        ExperimentConfig(seed=1, outer_folds=1)


def test_stratified_splits():
    """Test splits are stratified and cover every index once."""
    labels = np.repeat([0, 1], 10)
    splits = stratified_splits(labels, 5, 1)
    assert len(splits) == 5
    tests = np.concatenate([test for _, test in splits])
    assert sorted(tests.tolist()) == list(range(20))
    for train, test in splits:
        assert np.bincount(labels[test]).tolist() == [2, 2]
        assert not np.intersect1d(train, test).size
    again = stratified_splits(labels, 5, 1)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(splits, again, strict=True))

    with pytest.raises(DatasetError):
        stratified_splits(labels, 11, 1)


@pytest.mark.parametrize("strings", [{"per_class": 10}], indirect=True)
def test_run_initial(strings: LabeledDataset, tmp_path):
    """Test the initial metric is evaluated deterministically."""
    config = ExperimentConfig(seed=2, **SMALL)
    reports = run_experiment(config, strings)
    assert len(reports) == 2
    _check_folds(reports, len(strings))
    for report in reports:
        assert report.model is None
        assert report.runtime == 0.0
        assert set(report.hyperparameters) == {"K", "k", "lambda"}

    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    write_report(reports, first, include_runtime=False)
    write_report(run_experiment(config, strings), second, include_runtime=False)
    assert first.read_text() == second.read_text()
    lines = first.read_text().splitlines()
    assert lines[0].startswith("fold,method,classifier,error")
    assert len(lines) == 1 + 2 * 3 + 3
    assert set(summarize(reports)) == {KNN, MGLVQ, GOODNESS}


@pytest.mark.parametrize("method", ["bedl", "gesl"])
@pytest.mark.parametrize("strings", [{"per_class": 8}], indirect=True)
def test_run_learning(strings: LabeledDataset, method: str):
    """Test learning methods report a model, runtime and regularization scale."""
    config = ExperimentConfig(seed=4, method=method, **SMALL)
    reports = run_experiment(config, strings)
    _check_folds(reports, len(strings))
    for report in reports:
        assert report.model is not None
        assert report.runtime > 0.0
        assert report.hyperparameters["beta_scale"] in config.beta_scale_grid


def test_run_synthetic():
    """Test embedding learning on the three-class trees gives finite fold errors."""
    dataset = generate_synthetic_trees(0)
    config = ExperimentConfig(seed=0, method="bedl", **SMALL)
    reports = run_experiment(config, dataset)
    assert len(reports) == 2
    _check_folds(reports, len(dataset))
    for report in reports:
        assert isinstance(report.model, EmbeddingCostModel)
        assert np.all(np.isfinite(report.model.params))
        assert all(np.isfinite(error) for error in report.errors.values())


@pytest.mark.parametrize("synthetic", [8], indirect=True)
def test_run_cosine(rng, tmp_path, synthetic: LabeledDataset):
    """Test word vectors switch the learned metric to cosine costs."""
    path = tmp_path / "vectors.txt"
    write_word_vectors(path, synthetic.alphabet, rng)
    config = ExperimentConfig(seed=1, method="bedl", word_vectors=str(path), **SMALL)
    reports = run_experiment(config, synthetic)
    _check_folds(reports, len(synthetic))
    for report in reports:
        assert isinstance(report.model, TransformedCosineCostModel)


@pytest.mark.parametrize("strings", [{"per_class": 6}], indirect=True)
def test_run_too_small(strings: LabeledDataset):
    """Test outer folds too small for the inner folds fail."""
    config = ExperimentConfig(seed=1, **{**SMALL, "outer_folds": 3, "inner_folds": 5})
    with pytest.raises(DatasetError):
        run_experiment(config, strings)


@pytest.fixture(name="full_strings")
def fixture_full_strings():
    """Return the full Strings data."""
    return generate_strings(0)


@pytest.mark.slow
def test_strings_initial(full_strings: LabeledDataset):
    """Test nearest neighbours under unit costs err on a fair share of Strings."""
    reports = run_experiment(ExperimentConfig(seed=0, n_jobs=-1), full_strings)
    mean, _ = summarize(reports)[KNN]
    assert 0.10 <= mean <= 0.35


@pytest.mark.slow
def test_strings_bedl(full_strings: LabeledDataset):
    """Test learned embeddings separate Strings and collapse the filler symbols."""
    config = ExperimentConfig(seed=0, method="bedl", n_jobs=-1)
    reports = run_experiment(config, full_strings)
    for name, (mean, _) in summarize(reports).items():
        assert mean <= 0.05, name

    collapsed = 0
    for report in reports:
        model = report.model
        assert isinstance(model, EmbeddingCostModel)
        norms = {s: np.linalg.norm(model.vector(s)) for s in "abcd"}
        markers = (norms["c"] + norms["d"]) / 2.0
        filler = (norms["a"] + norms["b"]) / 2.0
        spread = np.linalg.norm(model.vector("c") - model.vector("d"))
        if filler <= 0.25 * markers and spread <= 0.25 * markers:
            collapsed += 1
    assert collapsed >= 15


@pytest.mark.slow
def test_strings_gesl(full_strings: LabeledDataset):
    """Test learned cost matrices separate Strings for the goodness classifier."""
    config = ExperimentConfig(seed=0, method="gesl", n_jobs=-1)
    mean, _ = summarize(run_experiment(config, full_strings))[GOODNESS]
    assert mean <= 0.05
