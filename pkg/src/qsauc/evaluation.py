"""Model selection and measurement: AUC, cross-validation, convergence study."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import rankdata

from . import rng
from .data import SemiSupervisedDataset
from .errors import InvalidParameterError, SingleClassError
from .model import predict_batch
from .trainer import Hyperparams, default_checkpoints, train


def auc(scores, labels) -> float:
    """Area under the ROC curve; tied scores count half.

    Computed from midranks, which is exactly the pair-counting definition
    (wins + half-ties over all positive-negative pairs) without the O(n^2)
    enumeration.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError(+1 if n_pos else -1)
    ranks = rankdata(scores)
    return float(
        (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    )


@dataclass(frozen=True)
class CvGrid:
    """Dyadic lambda and sigma ladders, gamma in tenths. The defaults are the
    full selection grid; tests and quick runs pass something smaller."""

    lambdas: tuple = tuple(2.0 ** k for k in range(-3, 4))
    sigmas: tuple = tuple(2.0 ** k for k in range(-3, 4))
    gammas: tuple = tuple(round(0.1 * i, 1) for i in range(11))
    folds: int = 5


def _stratified_folds(y: np.ndarray, folds: int, stream) -> list[np.ndarray]:
    pos = np.flatnonzero(y > 0)
    neg = np.flatnonzero(y < 0)
    if len(pos) < folds or len(neg) < folds:
        raise InvalidParameterError(
            f"need at least {folds} rows of each class for {folds}-fold CV"
        )
    pos = stream.permutation(pos)
    neg = stream.permutation(neg)
    return [
        np.concatenate([pos[k::folds], neg[k::folds]]) for k in range(folds)
    ]


def cross_validate(
    x,
    y,
    grid: CvGrid,
    base: Hyperparams,
    seed: int,
    unlabeled=None,
    eval_cache: str = "auto",
):
    """Grid search by stratified k-fold AUC.

    Every cell reuses base's iteration/batch budget; theta is re-derived per
    cell as (base.theta * base.lam) / lambda so the step-size schedule keeps
    the same theta*lambda product everywhere (and therefore stays inside the
    valid regime). If no unlabeled pool is given, each fold's training
    points double as the unlabeled pool with labels hidden.

    Returns (best Hyperparams, rows); rows hold every cell's fold AUCs.
    Ties prefer larger lambda, then larger sigma, then smaller gamma (the
    strongest regularization among equally good cells).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    stream = rng.data_stream(seed)
    fold_idx = _stratified_folds(y, grid.folds, stream)
    all_idx = np.arange(len(y))
    target = base.theta * base.lam
    rows = []
    for lam in grid.lambdas:
        for sigma in grid.sigmas:
            for gamma in grid.gammas:
                fold_aucs = []
                for k in range(grid.folds):
                    val = fold_idx[k]
                    tr = np.setdiff1d(all_idx, val)
                    x_tr, y_tr = x[tr], y[tr]
                    pool_u = unlabeled if unlabeled is not None else x_tr
                    ds = SemiSupervisedDataset(
                        positives=x_tr[y_tr > 0],
                        negatives=x_tr[y_tr < 0],
                        unlabeled=np.asarray(pool_u, dtype=np.float64),
                        dim=x.shape[1],
                    )
                    hp = replace(
                        base,
                        gamma=gamma,
                        lam=lam,
                        sigma=sigma,
                        theta=target / lam,
                        master_seed=base.master_seed + k,
                    )
                    mdl, _ = train(ds, hp, eval_cache=eval_cache)
                    fold_aucs.append(auc(predict_batch(mdl, x[val]), y[val]))
                rows.append(
                    {
                        "gamma": gamma,
                        "lam": lam,
                        "sigma": sigma,
                        "theta": target / lam,
                        "fold_aucs": fold_aucs,
                        "mean_auc": float(np.mean(fold_aucs)),
                    }
                )
    best = max(rows, key=lambda r: (r["mean_auc"], r["lam"], r["sigma"], -r["gamma"]))
    best_hp = replace(
        base,
        gamma=best["gamma"],
        lam=best["lam"],
        sigma=best["sigma"],
        theta=best["theta"],
    )
    return best_hp, rows


@dataclass
class ConvergenceReport:
    iterations: np.ndarray  # (C,)
    mse: np.ndarray  # (C,) mean over probes and repeats
    per_run_mse: np.ndarray  # (R, C)
    slope: float
    intercept: float
    degenerate: bool


def convergence_study(
    data,
    hp: Hyperparams,
    reference_values,
    probes,
    repeats: int = 5,
    checkpoints=None,
    eval_cache: str = "auto",
) -> ConvergenceReport:
    """Mean squared error of f_t against a fixed reference at probe points,
    over log-spaced checkpoints and repeated seeds, with a log-log slope fit.

    An O(1/t) convergence rate shows up as a slope near -1. The fit refuses
    degenerate inputs (zero or non-finite errors) instead of producing a
    misleading line.
    """
    probes = np.asarray(probes, dtype=np.float64)
    reference_values = np.asarray(reference_values, dtype=np.float64)
    if reference_values.shape[0] != probes.shape[0]:
        raise InvalidParameterError("one reference value per probe required")
    if repeats < 1:
        raise InvalidParameterError("repeats must be >= 1")
    ckpts = (
        np.asarray(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
        if checkpoints is not None
        else default_checkpoints(hp.iterations)
    )
    per_run = np.empty((repeats, len(ckpts)))
    for r in range(repeats):
        hp_r = replace(hp, master_seed=hp.master_seed + r)
        _, trace = train(
            data, hp_r, probes=probes, probe_iterations=ckpts, eval_cache=eval_cache
        )
        err = trace.probe_values - reference_values[None, :]
        per_run[r] = np.mean(err * err, axis=1)
    mse = per_run.mean(axis=0)
    degenerate = bool(np.any(~np.isfinite(mse)) or np.any(mse <= 0.0) or len(ckpts) < 2)
    if degenerate:
        slope, intercept = float("nan"), float("nan")
    else:
        slope, intercept = np.polyfit(np.log(ckpts.astype(float)), np.log(mse), 1)
    return ConvergenceReport(
        iterations=ckpts,
        mse=mse,
        per_run_mse=per_run,
        slope=float(slope),
        intercept=float(intercept),
        degenerate=degenerate,
    )
