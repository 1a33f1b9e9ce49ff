"""Exact small-scale references for the stochastic trainer.

Everything here recomputes quantities the trainer only ever estimates, by
full enumeration or dense linear algebra, using its own plain-numpy feature
and kernel evaluations (never the backend kernels). That independence is
the point: tests compare the two routes.

Pool order convention: wherever pooled quantities are stacked, the order is
positives, negatives, unlabeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidParameterError, SolverCapError
from .loss import square_loss
from .rff import FrequencyBlock, kernel_matrix


@dataclass
class RiskReport:
    r_pn: float
    r_pu: float
    r_nu: float
    r_pnu: float
    gamma: float


def empirical_risks(scores_p, scores_n, scores_u, gamma: float, loss=square_loss) -> RiskReport:
    """All-pairs empirical risks over full pools, and their composite

        r_pnu = (1-gamma)*(r_pu + r_nu - 1/2) + gamma*r_pn.

    With the 0-1 loss and the unlabeled pool equal to the union of the
    labeled pools, r_pu + r_nu - 1/2 reproduces r_pn exactly (ties at equal
    scores count 1/2); that identity is what the composite is built on.
    Empty unlabeled pool is allowed only at gamma == 1 (r_pu, r_nu are nan).
    """
    sp = np.asarray(scores_p, dtype=np.float64)
    sn = np.asarray(scores_n, dtype=np.float64)
    su = np.asarray(scores_u, dtype=np.float64)
    if sp.size == 0 or sn.size == 0:
        raise InvalidParameterError("positive and negative score sets must be nonempty")
    r_pn = float(np.mean(loss.value(sp[:, None], sn[None, :])))
    if su.size == 0:
        if gamma != 1.0:
            raise InvalidParameterError("empty unlabeled scores require gamma == 1")
        return RiskReport(r_pn=r_pn, r_pu=math.nan, r_nu=math.nan, r_pnu=r_pn, gamma=gamma)
    r_pu = float(np.mean(loss.value(sp[:, None], su[None, :])))
    r_nu = float(np.mean(loss.value(su[:, None], sn[None, :])))
    r_pnu = (1.0 - gamma) * (r_pu + r_nu - 0.5) + gamma * r_pn
    return RiskReport(r_pn=r_pn, r_pu=r_pu, r_nu=r_nu, r_pnu=r_pnu, gamma=gamma)


def exact_functional_gradient(
    data, f_values, gamma: float, probe, sigma: float, loss=square_loss
) -> float:
    """The composite risk's functional gradient, evaluated at one point.

    f_values are the current model's scores at the stacked pools (p, n, u
    order). The gradient is sum_k w_k * k(x_k, probe) where each pool
    point's weight averages the loss derivatives over its pairing pool;
    equivalently d/d eps of the composite risk of f + eps*k(probe, .) at
    eps = 0, which is how the finite-difference tests check it.
    """
    x_p = np.asarray(data.positives, dtype=np.float64)
    x_n = np.asarray(data.negatives, dtype=np.float64)
    x_u = np.asarray(data.unlabeled, dtype=np.float64)
    n_p, n_n, n_u = x_p.shape[0], x_n.shape[0], x_u.shape[0]
    f_values = np.asarray(f_values, dtype=np.float64)
    if f_values.shape[0] != n_p + n_n + n_u:
        raise InvalidParameterError(
            f"f_values has {f_values.shape[0]} entries, pools have {n_p + n_n + n_u}"
        )
    if n_u == 0 and gamma != 1.0:
        raise InvalidParameterError("empty unlabeled pool requires gamma == 1")
    sp = f_values[:n_p]
    sn = f_values[n_p : n_p + n_n]
    su = f_values[n_p + n_n :]
    # the pair mean 1/(|A||B|) leaves weight mean_B(deriv)/|A| on each a in A
    du_pn, dv_pn = loss.grads(sp[:, None], sn[None, :])
    w_p = gamma * du_pn.mean(axis=1) / n_p
    w_n = gamma * dv_pn.mean(axis=0) / n_n
    if n_u:
        du_pu, dv_pu = loss.grads(sp[:, None], su[None, :])
        du_un, dv_un = loss.grads(su[:, None], sn[None, :])
        w_p = w_p + (1.0 - gamma) * du_pu.mean(axis=1) / n_p
        w_n = w_n + (1.0 - gamma) * dv_un.mean(axis=0) / n_n
        w_u = (1.0 - gamma) * (dv_pu.mean(axis=0) + du_un.mean(axis=1)) / n_u
    probe = np.asarray(probe, dtype=np.float64)[None, :]
    total = float(w_p @ kernel_matrix(x_p, probe, sigma)[:, 0])
    total += float(w_n @ kernel_matrix(x_n, probe, sigma)[:, 0])
    if n_u:
        total += float(w_u @ kernel_matrix(x_u, probe, sigma)[:, 0])
    return total


def _own_features(xs: np.ndarray, block: FrequencyBlock) -> np.ndarray:
    # deliberate reimplementation of the feature map (plain numpy trig)
    z = xs @ block.frequencies.T
    inv = 1.0 / math.sqrt(block.count)
    return inv * np.hstack([np.cos(z), np.sin(z)])


def _pair_second_moment(phi_a: np.ndarray, phi_b: np.ndarray) -> np.ndarray:
    # E (phi_a - phi_b)(phi_a - phi_b)^T over independent uniform draws
    m_a = phi_a.mean(axis=0)
    m_b = phi_b.mean(axis=0)
    big_a = phi_a.T @ phi_a / phi_a.shape[0]
    big_b = phi_b.T @ phi_b / phi_b.shape[0]
    return big_a + big_b - np.outer(m_a, m_b) - np.outer(m_b, m_a)


def solve_fixed_feature(data, block: FrequencyBlock, gamma: float, lam: float) -> np.ndarray:
    """Exact minimizer of the composite square-loss risk plus (lam/2)||w||^2
    for the fixed linear model f(x) = <w, phi(x)> on one frequency block.

    The quadratic is assembled from pool moments; the normal system is
    symmetric positive definite for lam > 0 and solved by a Cholesky
    factorization.
    """
    phi_p = _own_features(np.asarray(data.positives, dtype=np.float64), block)
    phi_n = _own_features(np.asarray(data.negatives, dtype=np.float64), block)
    x_u = np.asarray(data.unlabeled, dtype=np.float64)
    if x_u.shape[0] == 0 and gamma != 1.0:
        raise InvalidParameterError("empty unlabeled pool requires gamma == 1")
    two_d = phi_p.shape[1]
    a = gamma * _pair_second_moment(phi_p, phi_n)
    m_p = phi_p.mean(axis=0)
    m_n = phi_n.mean(axis=0)
    rhs = gamma * (m_p - m_n)
    if x_u.shape[0]:
        phi_u = _own_features(x_u, block)
        m_u = phi_u.mean(axis=0)
        a = a + (1.0 - gamma) * (
            _pair_second_moment(phi_p, phi_u) + _pair_second_moment(phi_u, phi_n)
        )
        rhs = rhs + (1.0 - gamma) * ((m_p - m_u) + (m_u - m_n))
    system = 2.0 * a + lam * np.eye(two_d)
    return scipy.linalg.solve(system, 2.0 * rhs, assume_a="pos")


def fixed_feature_objective(data, block: FrequencyBlock, gamma: float, lam: float, w) -> float:
    """Composite square-loss risk plus (lam/2)||w||^2 at weights w, exactly."""
    w = np.asarray(w, dtype=np.float64)
    sp = _own_features(np.asarray(data.positives, dtype=np.float64), block) @ w
    sn = _own_features(np.asarray(data.negatives, dtype=np.float64), block) @ w
    x_u = np.asarray(data.unlabeled, dtype=np.float64)
    su = _own_features(x_u, block) @ w if x_u.shape[0] else np.zeros(0)
    rep = empirical_risks(sp, sn, su, gamma)
    return rep.r_pnu + 0.5 * lam * float(w @ w)


@dataclass
class KernelModel:
    points: np.ndarray  # (n, dim), stacked pools
    beta: np.ndarray  # (n,)
    sigma: float
    gamma: float
    lam: float
    residual: float  # max-norm of the objective gradient at beta


def _pair_weight_system(n_p: int, n_n: int, n_u: int, gamma: float):
    """(H, c): the all-pairs composite square risk equals
    (1/2) s^T H s + c^T s + const in the stacked score vector s."""
    n = n_p + n_n + n_u
    idx_p = np.arange(n_p)
    idx_n = n_p + np.arange(n_n)
    idx_u = n_p + n_n + np.arange(n_u)
    h = np.zeros((n, n))
    c = np.zeros(n)

    def add(a_idx, b_idx, coef):
        # group where a should outrank b, mean over all (a, b) pairs
        if coef == 0.0 or len(a_idx) == 0 or len(b_idx) == 0:
            return
        w = coef / (len(a_idx) * len(b_idx))
        h[a_idx, a_idx] += 2.0 * w * len(b_idx)
        h[b_idx, b_idx] += 2.0 * w * len(a_idx)
        h[np.ix_(a_idx, b_idx)] -= 2.0 * w
        h[np.ix_(b_idx, a_idx)] -= 2.0 * w
        c[a_idx] -= 2.0 * w * len(b_idx)
        c[b_idx] += 2.0 * w * len(a_idx)

    add(idx_p, idx_n, gamma)
    add(idx_p, idx_u, 1.0 - gamma)
    add(idx_u, idx_n, 1.0 - gamma)
    return h, c


def solve_kernel_closed_form(
    data, gamma: float, lam: float, sigma: float, cap: int = 2000
) -> KernelModel:
    """Exact minimizer of the composite square risk plus (lam/2)||f||^2 over
    the span of kernel sections at the pooled points.

    Solves (H K + lam I) beta = -c, which is nonsingular for lam > 0 even
    when K is rank-deficient (duplicated points), so duplicate rows are
    handled exactly rather than rejected. Refuses pools past `cap`: the cost
    is Theta(n^2) memory and Theta(n^3) time by construction.
    """
    x_p = np.asarray(data.positives, dtype=np.float64)
    x_n = np.asarray(data.negatives, dtype=np.float64)
    x_u = np.asarray(data.unlabeled, dtype=np.float64)
    n_p, n_n, n_u = x_p.shape[0], x_n.shape[0], x_u.shape[0]
    if n_p == 0 or n_n == 0:
        raise InvalidParameterError("positive and negative pools must be nonempty")
    if n_u == 0 and gamma != 1.0:
        raise InvalidParameterError("empty unlabeled pool requires gamma == 1")
    n = n_p + n_n + n_u
    if n > cap:
        raise SolverCapError(n, cap)
    pts = np.vstack([x_p, x_n] + ([x_u] if n_u else []))
    k = kernel_matrix(pts, pts, sigma)
    h, c = _pair_weight_system(n_p, n_n, n_u, gamma)
    beta = scipy.linalg.solve(h @ k + lam * np.eye(n), -c)
    grad = k @ (h @ (k @ beta) + lam * beta + c)
    return KernelModel(
        points=pts,
        beta=beta,
        sigma=sigma,
        gamma=gamma,
        lam=lam,
        residual=float(np.max(np.abs(grad))),
    )


def kernel_model_scores(km: KernelModel, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    return kernel_matrix(xs, km.points, km.sigma) @ km.beta


def kernel_model_norm_sq(km: KernelModel) -> float:
    """||f||^2 in the kernel's function space, beta^T K beta."""
    k = kernel_matrix(km.points, km.points, km.sigma)
    return float(km.beta @ k @ km.beta)
