"""Deterministic, platform-stable random streams.

Frequency sampling must be reproducible bit-for-bit across runs, platforms,
and numpy versions, because training never stores the random frequencies:
prediction regenerates them from (master_seed, iteration) and the result has
to match what the trainer saw. numpy's Generator guarantees stability only
per numpy version, so the frequency path uses an explicit counter generator
with the splitmix64 finalizer (public domain; Steele, Lea & Flood's mixer).

Layout, frozen:
    value(seed, k)       = mix64((seed + (k+1) * GOLDEN) mod 2^64)
    uniform(seed, k)     = (value >> 11 + 1) * 2^-53          in (0, 1]
    normals(seed, i)     = sqrt(-2 ln u1_i) * cos(2 pi u2_i)
                           with u1_i = uniform(seed, i),
                                u2_i = uniform(seed, n + i)    for a block of n
    iteration_seed(m, t) = mix64((m + t * GOLDEN) mod 2^64)

With this layout value(seed, 0..) reproduces the reference splitmix64
sequence for the same seed, so published test vectors apply.

Data-order streams (mini-batch draws, dataset splits) only need per-install
determinism and use numpy's PCG64 seeded through mix64.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF
_DATA_TAG = 0x6A09E667F3BCC909


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer (python-int arithmetic)."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix_block(z: np.ndarray) -> np.ndarray:
    # vectorized finalizer; uint64 ops wrap mod 2^64 like the scalar path
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def counter_values(seed: int, start: int, count: int) -> np.ndarray:
    """Stream words start .. start+count-1 for this seed, as uint64."""
    if count < 0:
        raise InvalidParameterError("count must be >= 0")
    k = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    return _mix_block(np.uint64(seed & _MASK) + k * np.uint64(GOLDEN))


def uniform_open_closed(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms in (0, 1]: 53 high bits, shifted off zero. Safe under log()."""
    z = counter_values(seed, start, count)
    return ((z >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0 ** -53)


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Block of N(0,1) draws via the Box-Muller cosine branch.

    Uses 2*count stream words: u1 from words [0, count), u2 from
    [count, 2*count). One normal per uniform pair keeps the map from
    (seed, index) to value closed-form and branch-free.
    """
    u1 = uniform_open_closed(seed, 0, count)
    u2 = uniform_open_closed(seed, count, count)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def iteration_seed(master_seed: int, iteration: int) -> int:
    """Per-iteration seed for frequency regeneration.

    Distinct iterations of the same run get decorrelated seeds; the same
    (master_seed, iteration) pair always maps to the same seed. This is the
    contract that lets predict re-materialize the trainer's frequencies.
    """
    if iteration < 1:
        raise InvalidParameterError(f"iteration index starts at 1, got {iteration}")
    return mix64((master_seed + iteration * GOLDEN) & _MASK)


def data_stream(master_seed: int) -> np.random.Generator:
    """Generator for data-order randomness (batch draws, shuffles).

    Seeded by mixing the master seed with a fixed tag so it never collides
    with any iteration_seed. Deterministic for a fixed numpy version, which
    is all replay-within-a-run requires.
    """
    return np.random.default_rng(mix64(master_seed ^ _DATA_TAG))
