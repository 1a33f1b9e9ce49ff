"""Stochastic training loop for AUC maximization from P/N/U pools.

Each iteration draws a mini-batch from every pool, draws a fresh random
frequency block from the iteration's own seed, takes one step

    history *= (1 - eta_t * lambda)          (decay of all earlier entries)
    history.append(-eta_t * batch gradient)  (one new coefficient vector)

with eta_t = theta / t, and never revisits old frequencies: the model keeps
one coefficient vector per iteration and regenerates frequencies on demand.
Four independent sources of randomness per step: the three pool draws and
the frequency block.

The composite risk being descended is

    (1-gamma) * (R_PU + R_NU - 1/2) + gamma * R_PN + (lambda/2) * ||f||^2

with the square surrogate inside each pairwise risk and all pair means taken
over the batch pairings.

Stream discipline (frozen; replay tooling relies on it): one data stream per
run seeds the pool draws, and each iteration issues exactly three
integers() calls with sizes (batch_p,), (batch_n,), (batch_u,) in that
order. The unlabeled call is skipped only when the unlabeled pool is empty
(allowed only at gamma == 1). Frequency seeds come from iteration_seed and
consume nothing from the data stream.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import backend, rng
from .errors import (
    DimensionMismatchError,
    EmptyPoolError,
    InvalidParameterError,
    NonFiniteTrainingError,
    ScheduleError,
)
from .loss import square_loss
from .model import CoefficientHistory, predict_batch
from .rff import feature_scale, sample_frequencies


def schedule_in_regime(theta: float, lam: float) -> bool:
    """True when theta*lambda sits where the decayed-coefficient bounds hold:
    the open interval (1, 2) or a positive integer."""
    x = theta * lam
    if not (x > 0 and math.isfinite(x)):
        return False
    return (1.0 < x < 2.0) or (x >= 1.0 and float(x).is_integer())


def decay_factor(t: int, theta: float, lam: float) -> float:
    """The multiplier applied to all earlier coefficients at step t.

    Computed as 1 - (theta*lambda)/t rather than 1 - (theta/t)*lambda: same
    value to within 1 ulp, but when theta*lambda is an integer the factor at
    t = theta*lambda is exactly 0.0, which makes the closed-form zero
    structure of the early coefficients exact rather than approximate.
    """
    return 1.0 - (theta * lam) / t


def step_size(t: int, theta: float) -> float:
    if t < 1:
        raise InvalidParameterError(f"iteration index starts at 1, got {t}")
    return theta / t


@dataclass
class Hyperparams:
    gamma: float
    lam: float
    theta: float
    sigma: float
    feature_count: int
    iterations: int
    batch_p: int = 16
    batch_n: int = 16
    batch_u: int = 16
    master_seed: int = 0
    unsafe_schedule: bool = False

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise InvalidParameterError(f"gamma must be in [0, 1], got {self.gamma}")
        for name in ("lam", "theta", "sigma"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
        if self.feature_count < 1:
            raise InvalidParameterError(
                f"feature_count must be >= 1, got {self.feature_count}"
            )
        if self.iterations < 0:
            raise InvalidParameterError(
                f"iterations must be >= 0, got {self.iterations}"
            )
        for name in ("batch_p", "batch_n", "batch_u"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        if not self.unsafe_schedule and not schedule_in_regime(self.theta, self.lam):
            raise ScheduleError(
                f"theta*lambda = {self.theta * self.lam:g} outside (1, 2) and not a "
                f"positive integer; coefficient decay bounds do not hold there. "
                f"Pass unsafe_schedule=True to proceed anyway."
            )


@dataclass
class Triplet:
    positive: np.ndarray
    negative: np.ndarray
    unlabeled: np.ndarray


def sample_triplet(data, stream: np.random.Generator) -> Triplet:
    """One uniform draw from each pool. Raises EmptyPoolError, never wraps."""
    pools = []
    for name, attr in (
        ("positive", "positives"),
        ("negative", "negatives"),
        ("unlabeled", "unlabeled"),
    ):
        pool = np.asarray(getattr(data, attr))
        if pool.shape[0] == 0:
            raise EmptyPoolError(name)
        pools.append(pool)
    rows = [pool[int(stream.integers(0, pool.shape[0]))] for pool in pools]
    return Triplet(positive=rows[0], negative=rows[1], unlabeled=rows[2])


def gradient_coefficient(
    f_p, f_n, f_u, phi_p, phi_n, phi_u, gamma: float, eta: float, loss=square_loss
):
    """The new coefficient vector: -eta times the batch risk gradient in the
    span of this iteration's features.

    Inputs are aligned arrays: model values f_* (B,) and feature rows phi_*
    (B, 2D) for the batch triplets. The three pairwise risk terms pair the
    batches elementwise: (p_k, n_k), (p_k, u_k), (u_k, n_k). An empty
    unlabeled batch is only legal at gamma == 1, where its terms carry
    weight zero anyway.
    """
    f_p = np.asarray(f_p, dtype=np.float64)
    f_n = np.asarray(f_n, dtype=np.float64)
    f_u = np.asarray(f_u, dtype=np.float64)
    bsz = f_p.shape[0]
    if f_n.shape[0] != bsz:
        raise InvalidParameterError("positive and negative batches differ in length")
    du_pn, dv_pn = loss.grads(f_p, f_n)
    wp = gamma * du_pn
    wn = gamma * dv_pn
    if f_u.shape[0] == 0:
        if gamma != 1.0:
            raise InvalidParameterError("empty unlabeled batch requires gamma == 1")
        grad = phi_p.T @ wp + phi_n.T @ wn
    else:
        if f_u.shape[0] != bsz:
            raise InvalidParameterError("unlabeled batch differs in length")
        du_pu, dv_pu = loss.grads(f_p, f_u)
        du_un, dv_un = loss.grads(f_u, f_n)
        wp = wp + (1.0 - gamma) * du_pu
        wn = wn + (1.0 - gamma) * dv_un
        wu = (1.0 - gamma) * (dv_pu + du_un)
        grad = phi_p.T @ wp + phi_n.T @ wn + phi_u.T @ wu
    return (-eta / bsz) * grad


@dataclass
class TrainTrace:
    """Per-iteration telemetry plus optional probe-point checkpoints.

    batch_values row t-1 holds the model values the trainer computed at
    iteration t's batch points (concatenated p, n, u draws) under the
    history as of the start of that iteration; these are the values the
    replay contract promises predict() will reproduce. probe_times are
    wall-clock seconds since training start and are process-local (kept out
    of any serialized output on purpose).
    """

    iterations: np.ndarray
    eta: np.ndarray
    batch_risk: np.ndarray
    batch_values: np.ndarray
    probe_iterations: np.ndarray
    probe_values: np.ndarray
    probe_times: np.ndarray
    wall_time: float = 0.0
    eval_cache_used: bool = False


def default_checkpoints(iterations: int, count: int = 24) -> np.ndarray:
    if iterations < 1:
        return np.zeros(0, dtype=np.int64)
    pts = np.rint(np.geomspace(1, iterations, count)).astype(np.int64)
    return np.unique(np.clip(pts, 1, iterations))


def _pool_matrix(data, name: str, dim: int) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(getattr(data, name)), dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, dim))
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(dim, arr.shape[-1], name)
    return arr


def _batch_risk(f_p, f_n, f_u, gamma, loss) -> float:
    r_pn = float(np.mean(loss.value(f_p, f_n)))
    if f_u.shape[0] == 0:
        return gamma * r_pn
    r_pu = float(np.mean(loss.value(f_p, f_u)))
    r_un = float(np.mean(loss.value(f_u, f_n)))
    return gamma * r_pn + (1.0 - gamma) * (r_pu + r_un - 0.5)


def train(
    data,
    hp: Hyperparams,
    probes=None,
    probe_iterations=None,
    eval_cache: str = "auto",
    gcache_budget_mb: int = 512,
    wcache_budget_mb: int = 768,
    frozen_block_seed: int | None = None,
    loss=square_loss,
):
    """Run the full training loop. Returns (CoefficientHistory, TrainTrace).

    eval_cache controls memoization of per-entry feature dots at the fixed
    pool points ('auto'/'on'/'off'). It is an accelerator only: produced
    histories, traces, and recorded values are bit-identical either way
    (the memoized quantity is a pure function of frozen inputs).

    frozen_block_seed is a diagnostic knob that reuses one frequency block
    for every iteration, turning the model into a fixed 2D-dimensional
    linear one. Histories trained this way are for in-process analysis
    only; predict() on them would regenerate per-iteration blocks instead.
    """
    if eval_cache not in ("auto", "on", "off"):
        raise InvalidParameterError(f"eval_cache must be auto/on/off, got {eval_cache}")
    dim = int(data.dim)
    x_p = _pool_matrix(data, "positives", dim)
    x_n = _pool_matrix(data, "negatives", dim)
    x_u = _pool_matrix(data, "unlabeled", dim)
    n_p, n_n, n_u = x_p.shape[0], x_n.shape[0], x_u.shape[0]
    if n_p == 0:
        raise EmptyPoolError("positive")
    if n_n == 0:
        raise EmptyPoolError("negative")
    if n_u == 0 and hp.gamma != 1.0:
        raise EmptyPoolError("unlabeled")
    use_u = n_u > 0
    if probes is not None:
        probes = np.ascontiguousarray(np.asarray(probes), dtype=np.float64)
        if probes.ndim != 2 or probes.shape[1] != dim:
            raise DimensionMismatchError(dim, probes.shape[-1], "probes")
        if probe_iterations is None:
            probe_iterations = default_checkpoints(hp.iterations)
    ckpts = (
        np.unique(np.asarray(list(probe_iterations), dtype=np.int64))
        if probes is not None
        else np.zeros(0, dtype=np.int64)
    )
    if len(ckpts) and (ckpts[0] < 1 or ckpts[-1] > hp.iterations):
        raise InvalidParameterError("probe iterations outside 1..iterations")

    big_t = hp.iterations
    count = hp.feature_count
    inv = feature_scale(count)
    thetalam = hp.theta * hp.lam
    bsz = max(hp.batch_p, hp.batch_n, hp.batch_u)
    stream = rng.data_stream(hp.master_seed)

    raws = np.zeros((big_t, 2 * count))
    scales = np.zeros(big_t)

    # full frequency cache when it fits; otherwise evaluation regenerates
    # blocks chunk by chunk (slow but identical bits, same path predict uses)
    wc = None
    if big_t * dim * count * 8 <= wcache_budget_mb << 20:
        wc = np.empty((big_t, dim, count))
    if wc is None and frozen_block_seed is not None:
        raise InvalidParameterError(
            "frozen_block_seed training needs the frequency cache; "
            "raise wcache_budget_mb"
        )

    n_pool = n_p + n_n + n_u
    if eval_cache == "on":
        use_gc = True
    elif eval_cache == "off":
        use_gc = False
    else:
        use_gc = big_t * n_pool * 8 <= gcache_budget_mb << 20
    gc = backend.gcache_new(n_pool, big_t) if use_gc else None
    pool_all = np.ascontiguousarray(np.vstack([x_p, x_n, x_u])) if use_gc else None

    def history_view(t: int) -> CoefficientHistory:
        return CoefficientHistory(
            dim=dim,
            feature_count=count,
            sigma=hp.sigma,
            master_seed=hp.master_seed,
            raws=raws[:t],
            scales=scales[:t],
        )

    def eval_points(xs: np.ndarray, t: int) -> np.ndarray:
        # honest pass over entries 1..t (no memo); used for probes and in
        # cache-off mode for batches
        if t == 0:
            return np.zeros(xs.shape[0])
        if wc is not None:
            acc = np.zeros(xs.shape[0])
            backend.score_accum(wc[:t], raws[:t], scales[:t], xs, acc)
            return acc * inv
        return predict_batch(history_view(t), xs)

    nb = 2 * bsz + (bsz if use_u else 0)
    eta_arr = np.zeros(big_t)
    risk_arr = np.zeros(big_t)
    values_arr = np.zeros((big_t, nb))
    probe_vals = np.zeros((len(ckpts), probes.shape[0] if probes is not None else 0))
    probe_times = np.zeros(len(ckpts))
    ckpt_pos = {int(t): k for k, t in enumerate(ckpts)}

    def params_payload() -> dict:
        return {
            "gamma": hp.gamma,
            "lam": hp.lam,
            "theta": hp.theta,
            "sigma": hp.sigma,
            "feature_count": count,
            "iterations": big_t,
            "master_seed": hp.master_seed,
        }

    t0 = time.perf_counter()
    for t in range(1, big_t + 1):
        eta = step_size(t, hp.theta)
        idx_p = stream.integers(0, n_p, size=hp.batch_p)
        idx_n = stream.integers(0, n_n, size=hp.batch_n)
        idx_u = stream.integers(0, n_u, size=hp.batch_u) if use_u else None
        cyc = np.arange(bsz)
        cp = idx_p[cyc % hp.batch_p]
        cn = idx_n[cyc % hp.batch_n]
        cu = idx_u[cyc % hp.batch_u] if use_u else None

        if frozen_block_seed is not None:
            block = sample_frequencies(frozen_block_seed, dim, count, hp.sigma)
        else:
            block = sample_frequencies(
                rng.iteration_seed(hp.master_seed, t), dim, count, hp.sigma
            )

        xb = np.vstack(
            [x_p[cp], x_n[cn]] + ([x_u[cu]] if use_u else [])
        )
        if t == 1:
            fb = np.zeros(nb)
        elif use_gc:
            cols = np.concatenate(
                [cp, n_p + cn] + ([n_p + n_n + cu] if use_u else [])
            )
            fb = backend.gcache_score(gc, t - 1, cols, scales) * inv
        else:
            fb = eval_points(xb, t - 1)
        if not np.isfinite(fb).all():
            raise NonFiniteTrainingError(t, "model values", params_payload())
        f_p = fb[:bsz]
        f_n = fb[bsz : 2 * bsz]
        f_u = fb[2 * bsz :]

        phib = backend.feature_block(xb, block.transposed, inv)
        alpha = gradient_coefficient(
            f_p,
            f_n,
            f_u,
            phib[:bsz],
            phib[bsz : 2 * bsz],
            phib[2 * bsz :],
            hp.gamma,
            eta,
            loss=loss,
        )
        if not np.isfinite(alpha).all():
            raise NonFiniteTrainingError(t, "coefficient", params_payload())

        if t > 1:
            scales[: t - 1] *= decay_factor(t, hp.theta, hp.lam)
        raws[t - 1] = alpha
        scales[t - 1] = 1.0
        if wc is not None:
            wc[t - 1] = block.transposed
        if use_gc:
            backend.gcache_write(
                gc, t - 1, backend.entry_dots(block.transposed[None], 0, alpha, pool_all)
            )

        eta_arr[t - 1] = eta
        risk_arr[t - 1] = _batch_risk(f_p, f_n, f_u, hp.gamma, loss)
        values_arr[t - 1] = fb

        k = ckpt_pos.get(t)
        if k is not None:
            probe_vals[k] = eval_points(probes, t)
            probe_times[k] = time.perf_counter() - t0

    trace = TrainTrace(
        iterations=np.arange(1, big_t + 1, dtype=np.int64),
        eta=eta_arr,
        batch_risk=risk_arr,
        batch_values=values_arr,
        probe_iterations=ckpts,
        probe_values=probe_vals,
        probe_times=probe_times,
        wall_time=time.perf_counter() - t0,
        eval_cache_used=use_gc,
    )
    return history_view(big_t), trace


@dataclass
class ScheduleReport:
    theta: float
    lam: float
    t: int
    coefficients: np.ndarray
    max_abs: float
    max_bound: float
    sum_sq: float
    sum_bound: float
    leading_zeros: int
    passed: bool


def coefficient_schedule_check(
    theta: float, lam: float, t: int, unsafe: bool = False
) -> ScheduleReport:
    """Closed-form scalar profile of the decayed step weights after t steps.

    Entry i of the returned coefficients is -eta_i * prod_{j=i+1..t} of the
    decay factors: the scalar weight multiplying iteration i's gradient in
    the final model. Verifies the regime guarantees max |a_i| <= theta/t and
    sum a_i^2 <= theta^2/t, and counts the exact leading zeros the integer
    regime produces.
    """
    if t < 1:
        raise InvalidParameterError(f"t must be >= 1, got {t}")
    if not unsafe and not schedule_in_regime(theta, lam):
        raise ScheduleError(
            f"theta*lambda = {theta * lam:g} outside (1, 2) and not a positive integer"
        )
    steps = np.arange(1, t + 1, dtype=np.float64)
    etas = theta / steps
    factors = np.array([decay_factor(j, theta, lam) for j in range(1, t + 1)])
    # suffix[i] = prod_{j=i+1..t} factors[j]; factors[0] (j=1) never applies
    suffix = np.ones(t)
    if t > 1:
        suffix[:-1] = np.cumprod(factors[:0:-1])[::-1]
    coeffs = -etas * suffix
    max_abs = float(np.max(np.abs(coeffs)))
    sum_sq = float(np.sum(coeffs * coeffs))
    max_bound = theta / t
    sum_bound = theta * theta / t
    lead = 0
    for v in coeffs:
        if v == 0.0:
            lead += 1
        else:
            break
    slack = 1.0 + 1e-12
    return ScheduleReport(
        theta=theta,
        lam=lam,
        t=t,
        coefficients=coeffs,
        max_abs=max_abs,
        max_bound=max_bound,
        sum_sq=sum_sq,
        sum_bound=sum_bound,
        leading_zeros=lead,
        passed=(max_abs <= max_bound * slack) and (sum_sq <= sum_bound * slack),
    )
