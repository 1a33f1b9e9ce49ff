import math

import numpy as np
import pytest

from qsauc.errors import InvalidParameterError
from qsauc.rff import (
    feature_map,
    feature_scale,
    kernel_exact,
    kernel_matrix,
    sample_frequencies,
)


def test_block_deterministic_and_shaped():
    b1 = sample_frequencies(42, 3, 8, 0.5)
    b2 = sample_frequencies(42, 3, 8, 0.5)
    assert np.array_equal(b1.frequencies, b2.frequencies)
    assert b1.frequencies.shape == (8, 3)
    assert np.array_equal(b1.transposed, b1.frequencies.T)
    assert not np.array_equal(b1.frequencies, sample_frequencies(43, 3, 8, 0.5).frequencies)


def test_frequency_variance_tracks_sigma():
    # k(x,y) = exp(-sigma ||x-y||^2) needs component variance 2*sigma
    for sigma in (0.25, 1.0, 4.0):
        b = sample_frequencies(7, 2, 20_000, sigma)
        assert abs(b.frequencies.var() - 2 * sigma) < 0.05 * 2 * sigma


def test_feature_vector_has_unit_norm():
    b = sample_frequencies(3, 4, 64, 1.0)
    phi = feature_map(np.linspace(-1, 1, 4), b)
    assert phi.count == 64
    assert phi.values.shape == (128,)
    # cos^2 + sin^2 telescopes to exactly one per frequency
    assert abs(phi.values @ phi.values - 1.0) < 1e-12


def test_feature_map_matches_plain_trig():
    b = sample_frequencies(11, 5, 32, 2.0)
    stream = np.random.default_rng(0)
    for _ in range(10):
        x = stream.normal(size=5)
        z = b.frequencies @ x
        want = np.concatenate([np.cos(z), np.sin(z)]) * feature_scale(32)
        assert np.max(np.abs(feature_map(x, b).values - want)) < 1e-13


def test_kernel_exact_hand_values():
    x = np.zeros(2)
    y = np.ones(2)
    assert kernel_exact(x, x, 3.0) == 1.0
    assert math.isclose(kernel_exact(x, y, 0.5), math.exp(-1.0), rel_tol=1e-12)
    km = kernel_matrix(np.stack([x, y]), np.stack([x, y]), 0.5)
    assert km.shape == (2, 2)
    assert math.isclose(km[0, 1], math.exp(-1.0), rel_tol=1e-12)
    assert math.isclose(km[0, 0], 1.0, rel_tol=1e-12)


def test_feature_dot_approximates_kernel():
    b = sample_frequencies(5, 6, 4096, 1.0)
    stream = np.random.default_rng(2)
    for _ in range(5):
        x = stream.uniform(0, 1, 6)
        y = stream.uniform(0, 1, 6)
        approx = feature_map(x, b).values @ feature_map(y, b).values
        assert abs(approx - kernel_exact(x, y, 1.0)) < 0.05


def test_parameter_validation():
    with pytest.raises(InvalidParameterError):
        sample_frequencies(0, 0, 4, 1.0)
    with pytest.raises(InvalidParameterError):
        sample_frequencies(0, 3, 0, 1.0)
    with pytest.raises(InvalidParameterError):
        sample_frequencies(0, 3, 4, -1.0)
