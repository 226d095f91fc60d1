"""Tests for pca module."""

import logging

import numpy as np
import pytest

from tedlearn.error import TedLearnError
from tedlearn.pca import MODE_ALL, MODE_TOP2, MODE_VARIANCE, pca_project


def test_pca_line():
    """Test points on a line project onto one direction."""
    t = np.linspace(-2.0, 2.0, 9)
    vectors = np.stack([t, 2.0 * t, np.full_like(t, 3.0)], axis=1)
    result = pca_project(vectors, MODE_VARIANCE)
    assert result.projected.shape == (9, 1)
    assert result.explained[0] == pytest.approx(1.0)
    direction = np.array([1.0, 2.0, 0.0]) / np.sqrt(5.0)
    assert np.allclose(result.components[0], direction)
    assert np.allclose(result.projected[:, 0], np.sqrt(5.0) * t)
    assert np.allclose(result.mean, [0.0, 0.0, 3.0])


def test_pca_reconstruct(rng):
    """Test keeping every direction reconstructs the input."""
    vectors = rng.normal(size=(10, 4))
    result = pca_project(vectors, MODE_ALL)
    assert np.allclose(result.reconstruct(), vectors)
    assert result.cumulative[-1] == pytest.approx(1.0)
    assert np.all(np.diff(result.explained) <= 1e-12)


def test_pca_top2(rng):
    """Test default mode keeps two directions."""
    vectors = rng.normal(size=(6, 5))
    result = pca_project(vectors)
    assert result.projected.shape == (6, 2)
    assert np.allclose(result.components @ result.components.T, np.eye(2))
    assert pca_project(rng.normal(size=(4, 1)), MODE_TOP2).projected.shape == (4, 1)


def test_pca_variance(rng):
    """Test variance mode keeps the fewest directions above the threshold."""
    scales = np.array([10.0, 3.0, 1.0, 0.1])
    vectors = rng.normal(size=(200, 4)) * scales
    result = pca_project(vectors, MODE_VARIANCE, 0.9)
    assert result.cumulative[-1] >= 0.9
    full = pca_project(vectors, MODE_ALL)
    keep = len(result.explained)
    assert keep == 1 or full.cumulative[keep - 2] < 0.9


def test_pca_zero_variance(caplog):
    """Test identical vectors warn and project to the origin."""
    with caplog.at_level(logging.WARNING):
        result = pca_project(np.ones((3, 2)))
    assert not result.projected.any()
    assert "zero variance" in caplog.text


def test_pca_invalid():
    """Test invalid inputs fail."""
    with pytest.raises(TedLearnError):
        pca_project(np.ones((1, 3)))
    with pytest.raises(TedLearnError):
        pca_project(np.eye(3), "some")
