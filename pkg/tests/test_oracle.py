"""Exact references: risks, functional gradients, and the two closed-form
solvers. These are the rulers the stochastic trainer is measured against, so
they get their own independent checks (finite differences, brute-force
enumeration, perturbation tests)."""

import numpy as np
import pytest

from qsauc.data import SemiSupervisedDataset
from qsauc.errors import InvalidParameterError, SolverCapError
from qsauc.loss import square_loss, zero_one_loss
from qsauc.oracle import (
    _own_features,
    empirical_risks,
    exact_functional_gradient,
    fixed_feature_objective,
    kernel_model_norm_sq,
    kernel_model_scores,
    solve_fixed_feature,
    solve_kernel_closed_form,
)
from qsauc.rff import kernel_exact, kernel_matrix, sample_frequencies


def test_empirical_risks_match_brute_force():
    stream = np.random.default_rng(1)
    sp = stream.normal(size=4)
    sn = stream.normal(size=3)
    su = stream.normal(size=5)
    rep = empirical_risks(sp, sn, su, gamma=0.3)
    r_pn = np.mean([square_loss.value(a, b) for a in sp for b in sn])
    r_pu = np.mean([square_loss.value(a, b) for a in sp for b in su])
    r_nu = np.mean([square_loss.value(a, b) for a in su for b in sn])
    assert abs(rep.r_pn - r_pn) < 1e-14
    assert abs(rep.r_pu - r_pu) < 1e-14
    assert abs(rep.r_nu - r_nu) < 1e-14
    want = 0.3 * r_pn + 0.7 * (r_pu + r_nu - 0.5)
    assert abs(rep.r_pnu - want) < 1e-14


def test_zero_one_identity_on_pooled_unlabeled():
    # with the 0-1 loss and U = P union N the unlabeled decomposition is an
    # identity, including tied scores
    stream = np.random.default_rng(2)
    for _ in range(20):
        sp = np.round(stream.normal(size=6), 1)
        sn = np.round(stream.normal(size=4), 1)
        su = np.concatenate([sp, sn])
        rep = empirical_risks(sp, sn, su, gamma=0.0, loss=zero_one_loss)
        assert abs(rep.r_pu + rep.r_nu - 0.5 - rep.r_pn) < 1e-12


def test_empty_unlabeled_needs_gamma_one():
    rep = empirical_risks([1.0], [0.0], [], gamma=1.0)
    assert rep.r_pnu == rep.r_pn
    with pytest.raises(InvalidParameterError):
        empirical_risks([1.0], [0.0], [], gamma=0.5)


def _risk_of(data, f_values, gamma, loss=square_loss):
    n_p = data.positives.shape[0]
    n_n = data.negatives.shape[0]
    rep = empirical_risks(
        f_values[:n_p], f_values[n_p : n_p + n_n], f_values[n_p + n_n :], gamma, loss
    )
    return rep.r_pnu


@pytest.mark.parametrize("gamma", [0.0, 0.4, 1.0])
def test_functional_gradient_matches_finite_difference(tiny_pools, gamma):
    # d/d eps of the pooled risk of f + eps*k(probe, .) at eps = 0
    stream = np.random.default_rng(3)
    pools = np.vstack(
        [tiny_pools.positives, tiny_pools.negatives, tiny_pools.unlabeled]
    )
    f_values = stream.normal(size=pools.shape[0])
    probe = stream.normal(size=3)
    sigma = 0.7
    got = exact_functional_gradient(tiny_pools, f_values, gamma, probe, sigma)
    eps = 1e-6
    bump = np.array([kernel_exact(x, probe, sigma) for x in pools])
    up = _risk_of(tiny_pools, f_values + eps * bump, gamma)
    dn = _risk_of(tiny_pools, f_values - eps * bump, gamma)
    assert abs(got - (up - dn) / (2 * eps)) < 1e-7


def test_functional_gradient_validates_lengths(tiny_pools):
    with pytest.raises(InvalidParameterError):
        exact_functional_gradient(tiny_pools, np.zeros(3), 0.5, np.zeros(3), 1.0)


def test_kernel_solver_residual_is_tiny(gauss_pools):
    km = solve_kernel_closed_form(gauss_pools, gamma=0.5, lam=0.1, sigma=0.5)
    assert km.residual < 1e-8
    assert km.beta.shape == (80,)
    assert kernel_model_norm_sq(km) >= 0.0


def test_kernel_solver_perturbation_increases_objective(gauss_pools):
    gamma, lam, sigma = 0.5, 0.1, 0.5
    km = solve_kernel_closed_form(gauss_pools, gamma, lam, sigma)
    k = kernel_matrix(km.points, km.points, sigma)
    n_p = gauss_pools.positives.shape[0]
    n_n = gauss_pools.negatives.shape[0]

    def objective(beta):
        scores = k @ beta
        rep = empirical_risks(
            scores[:n_p], scores[n_p : n_p + n_n], scores[n_p + n_n :], gamma
        )
        return rep.r_pnu + 0.5 * lam * float(beta @ k @ beta)

    base = objective(km.beta)
    stream = np.random.default_rng(4)
    for _ in range(10):
        assert objective(km.beta + 1e-3 * stream.normal(size=km.beta.shape)) > base


def test_kernel_solver_full_pool_duplication_invariance(gauss_pools):
    # duplicating every point in every pool leaves all pair means unchanged,
    # so the minimizer (as a function) cannot move
    doubled = SemiSupervisedDataset(
        positives=np.vstack([gauss_pools.positives] * 2),
        negatives=np.vstack([gauss_pools.negatives] * 2),
        unlabeled=np.vstack([gauss_pools.unlabeled] * 2),
        dim=gauss_pools.dim,
    )
    km1 = solve_kernel_closed_form(gauss_pools, 0.4, 0.2, 0.5)
    km2 = solve_kernel_closed_form(doubled, 0.4, 0.2, 0.5)
    probes = np.random.default_rng(5).standard_normal((7, 2))
    s1 = kernel_model_scores(km1, probes)
    s2 = kernel_model_scores(km2, probes)
    assert np.max(np.abs(s1 - s2)) < 1e-8


def test_kernel_solver_refuses_past_cap(gauss_pools):
    with pytest.raises(SolverCapError) as exc:
        solve_kernel_closed_form(gauss_pools, 0.5, 0.1, 0.5, cap=79)
    assert exc.value.n == 80
    assert exc.value.cap == 79


def test_fixed_feature_solver_is_a_minimum(gauss_pools):
    block = sample_frequencies(7, 2, 16, 0.5)
    gamma, lam = 0.6, 0.3
    w = solve_fixed_feature(gauss_pools, block, gamma, lam)
    base = fixed_feature_objective(gauss_pools, block, gamma, lam, w)
    stream = np.random.default_rng(6)
    for scale in (1e-2, 1e-4):
        for _ in range(10):
            probe_w = w + scale * stream.normal(size=w.shape)
            assert fixed_feature_objective(gauss_pools, block, gamma, lam, probe_w) > base


def test_solvers_agree_at_many_features(gauss_pools):
    # enough random features makes the linear model track the kernel one
    gamma, lam, sigma = 0.5, 0.2, 0.5
    km = solve_kernel_closed_form(gauss_pools, gamma, lam, sigma)
    block = sample_frequencies(8, 2, 1024, sigma)
    w = solve_fixed_feature(gauss_pools, block, gamma, lam)
    probes = np.random.default_rng(7).standard_normal((9, 2))
    lin = _own_features(probes, block) @ w
    ker = kernel_model_scores(km, probes)
    assert np.max(np.abs(lin - ker)) < 0.1
    assert np.corrcoef(lin, ker)[0, 1] > 0.99
