"""Random Fourier features for the Gaussian kernel k(x,y) = exp(-sigma*||x-y||^2).

The kernel's spectral density is N(0, 2*sigma*I), so a frequency block is
`count` iid rows omega ~ sqrt(2*sigma) * N(0, I), drawn from the counter
generator in rng so that a (seed, dim, count, sigma) tuple always yields the
same block, on any platform. Training never persists frequencies; it relies
on this regeneration contract.

The feature map is

    phi(x) = sqrt(1/count) * [cos(omega_1.x) .. cos(omega_D.x),
                              sin(omega_1.x) .. sin(omega_D.x)]

which satisfies E[phi(x).phi(y)] = k(x,y) and ||phi(x)|| = 1 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import backend, rng
from .errors import DimensionMismatchError, InvalidParameterError


@dataclass(frozen=True)
class FrequencyBlock:
    seed: int
    dim: int
    count: int
    sigma: float
    frequencies: np.ndarray  # (count, dim)
    # (dim, count) copy, contiguous along the count axis; kernel-friendly
    transposed: np.ndarray = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # (2*count,)
    count: int


def feature_scale(count: int) -> float:
    return 1.0 / math.sqrt(count)


def sample_frequencies(seed: int, dim: int, count: int, sigma: float) -> FrequencyBlock:
    """Regenerate the frequency block for this seed. Pure in all arguments."""
    if dim < 1:
        raise InvalidParameterError(f"dim must be >= 1, got {dim}")
    if count < 1:
        raise InvalidParameterError(f"count must be >= 1, got {count}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise InvalidParameterError(f"sigma must be finite and > 0, got {sigma}")
    z = rng.standard_normals(seed, count * dim)
    freqs = (math.sqrt(2.0 * sigma) * z).reshape(count, dim)
    return FrequencyBlock(
        seed=seed,
        dim=dim,
        count=count,
        sigma=sigma,
        frequencies=freqs,
        transposed=np.ascontiguousarray(freqs.T),
    )


def feature_map(x: np.ndarray, block: FrequencyBlock) -> FeatureVector:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != block.dim:
        raise DimensionMismatchError(block.dim, x.shape[-1] if x.ndim else 0, "point")
    vals = backend.feature_block(x[None, :], block.transposed, feature_scale(block.count))
    return FeatureVector(values=vals[0], count=block.count)


def kernel_exact(x: np.ndarray, y: np.ndarray, sigma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(x.shape[-1], y.shape[-1], "kernel argument")
    d = x - y
    return float(np.exp(-sigma * np.dot(d, d)))


def kernel_matrix(xs: np.ndarray, ys: np.ndarray, sigma: float) -> np.ndarray:
    """K[i, j] = exp(-sigma * ||xs_i - ys_j||^2), dense."""
    return np.exp(-sigma * cdist(xs, ys, "sqeuclidean"))
