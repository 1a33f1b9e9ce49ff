"""Backend dispatch for the evaluation kernels.

Two interchangeable implementations: 'numba' (JIT, vectorized polynomial
trig, the default) and 'numpy' (reference, libm trig). Selection order:
the QSAUC_BACKEND environment variable at import, then use_backend() for
scoped overrides (tests, benchmarks).

The two backends agree to ~1e-13 relative (they differ in trig rounding and
summation grouping); each is exactly self-consistent, which is the property
the package's bit-level contracts (train/predict alignment, cache
invisibility, batch-equals-single) are built on.

Array contracts: float64 everywhere; wc is the stacked frequency cache with
shape (entries, dim, count), transposed so the count axis is contiguous;
raws is (entries, 2*count); per-entry dot values carry no sqrt(1/count)
scaling (callers apply it once, after accumulation).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from . import _kernels_numpy as _knp
from .errors import ConfigError

_VALID = ("numba", "numpy")
_BACKEND = os.environ.get("QSAUC_BACKEND", "numba").strip().lower() or "numba"
_NB = None


def _checked(name: str) -> str:
    if name not in _VALID:
        raise ConfigError(
            f"unknown backend {name!r}: QSAUC_BACKEND must be one of {_VALID}"
        )
    return name


def _kern_nb():
    global _NB
    if _NB is None:
        try:
            from . import _kernels_numba as mod
        except ImportError as exc:
            raise ConfigError(
                f"numba backend unavailable ({exc}); set QSAUC_BACKEND=numpy"
            ) from exc
        _NB = mod
    return _NB


def active_backend() -> str:
    return _checked(_BACKEND)


@contextmanager
def use_backend(name: str):
    """Temporarily switch backends (scoped; restores the previous one)."""
    global _BACKEND
    prev = _BACKEND
    _BACKEND = _checked(name)
    try:
        yield
    finally:
        _BACKEND = prev


def warm_up(dim: int = 2, count: int = 16) -> None:
    """Precompile the numba kernels (no-op on the numpy backend)."""
    if active_backend() == "numba":
        _kern_nb().warm_up(dim, count)


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _pad3(x: np.ndarray):
    n = x.shape[0]
    m = -(-n // 3) * 3
    if m == n:
        return _f64(x)
    xp = np.zeros((m, x.shape[1]))
    xp[:n] = x
    return xp


def score_accum(wc, raws, scales, x, acc) -> None:
    """acc[j] += sum_i scales[i] * <raws[i], trig(wc[i] . x_j)>, ascending i.

    In-place accumulation so callers can stream entry chunks: both backends
    add one scaled entry dot at a time, so splitting the entry range across
    calls gives the same bits as one call.
    """
    if active_backend() == "numba":
        xpad = _pad3(x)
        accpad = np.zeros(xpad.shape[0])
        accpad[: len(acc)] = acc
        _kern_nb().score_accum_kernel(_f64(wc), _f64(raws), _f64(scales), xpad, accpad)
        acc[:] = accpad[: len(acc)]
    else:
        _knp.score_accum(_f64(wc), _f64(raws), _f64(scales), _f64(x), acc)


def entry_dots(wc, i: int, raw, x) -> np.ndarray:
    """Unscaled per-entry dots of entry i at every row of x."""
    if active_backend() == "numba":
        xpad = _pad3(x)
        out = np.empty(xpad.shape[0])
        _kern_nb().entry_dots_kernel(_f64(wc), i, _f64(raw), xpad, out)
        return out[: x.shape[0]]
    return _knp.entry_dots(_f64(wc[i]), _f64(raw), _f64(x))


def gcache_new(n_pool: int, capacity: int) -> np.ndarray:
    """Memo table for per-entry dots at fixed pool points.

    Layout is backend-specific (point-major for numba, entry-major for
    numpy) so the scoring pass reads it the same way the uncached path
    computes; treat it as opaque and go through gcache_write/gcache_score.
    """
    if active_backend() == "numba":
        return np.empty((n_pool, capacity))
    return _knp.gcache_new(n_pool, capacity)


def gcache_write(g, i: int, vals) -> None:
    if active_backend() == "numba":
        g[:, i] = vals
    else:
        _knp.gcache_write(g, i, vals)


def gcache_score(g, t: int, cols, scales) -> np.ndarray:
    """sum_{i<t} scales[i] * dot_i(pool[col]) for each col, ascending i."""
    if active_backend() == "numba":
        if t == 0 or len(cols) == 0:
            return np.zeros(len(cols))
        gt = np.ascontiguousarray(g[cols, :t])
        out = np.empty(len(cols))
        _kern_nb().cached_score_kernel(_f64(scales[:t]), gt, out)
        return out
    return _knp.gcache_score(g, t, np.asarray(cols), _f64(scales))


def feature_block(x, w, inv: float) -> np.ndarray:
    """inv * [cos(x W); sin(x W)] rows; w is one entry's (dim, count) block."""
    if active_backend() == "numba":
        xc = _f64(x)
        out = np.empty((xc.shape[0], 2 * w.shape[1]))
        _kern_nb().feature_block_kernel(xc, _f64(w), inv, out)
        return out
    return _knp.feature_block(_f64(x), _f64(w), inv)
