"""Pure-numpy reference kernels.

Mirrors of the numba kernels built from np.cos/np.sin, used when the env
flag selects the numpy backend (or numba is unavailable). Slower, but an
independent implementation of the same contracts, which the parity tests
exploit.

Determinism notes: reductions are per-row pairwise sums (entry dots) and an
explicit ascending python loop over entries (score accumulation); BLAS and
einsum are avoided on these paths because their specialized inner loops can
reassociate sums differently depending on operand shape, which would break
the batch-equals-single and cached-equals-uncached bit contracts.
"""

import numpy as np


def _z_block(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # x (n,d) @ w (d,D) without BLAS: d broadcasted multiply-adds
    z = x[:, [0]] * w[0][None, :]
    for dd in range(1, w.shape[0]):
        z += x[:, [dd]] * w[dd][None, :]
    return z


def entry_dots(w: np.ndarray, raw: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Per-entry dots <raw, [cos(Wx); sin(Wx)]> for one entry, all points."""
    D = w.shape[1]
    z = _z_block(x, w)
    return (np.cos(z) * raw[:D]).sum(axis=1) + (np.sin(z) * raw[D:]).sum(axis=1)


def score_accum(wc, raws, scales, x, acc) -> None:
    """acc[j] += sum_i scales[i] * dot_i(x_j), one entry at a time, ascending."""
    for i in range(wc.shape[0]):
        acc += scales[i] * entry_dots(wc[i], raws[i], x)


def gcache_new(n_pool: int, capacity: int) -> np.ndarray:
    # entry-major: row i holds entry i's dots at every pool point
    return np.empty((capacity, n_pool))


def gcache_write(g: np.ndarray, i: int, vals: np.ndarray) -> None:
    g[i, :] = vals


def gcache_score(g, t, cols, scales) -> np.ndarray:
    """sum_i scales[i] * g[i, cols]: the score_accum recurrence over memoized
    dot rows, term for term."""
    acc = np.zeros(len(cols))
    for i in range(t):
        acc += scales[i] * g[i, cols]
    return acc


def feature_block(x, w, inv) -> np.ndarray:
    z = _z_block(x, w)
    out = np.empty((x.shape[0], 2 * w.shape[1]))
    out[:, : w.shape[1]] = np.cos(z)
    out[:, w.shape[1]:] = np.sin(z)
    out *= inv
    return out
