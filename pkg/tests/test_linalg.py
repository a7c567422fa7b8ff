import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given
from hypothesis import strategies as st

from mole2d.cycles import FCB_ODO, MCB, cycle_basis
from mole2d.errors import NotPositiveDefinite, OutOfRange, SingularBlock
from mole2d.graph import build_graph, incidence_matrices
from mole2d.linalg import (
    GaussianBelief,
    LaplacianSolver,
    chi2_cdf_1dof,
    chi2_quantile_1dof,
    condition,
    normal_quantile,
    projection_identity_residual,
    weighted_ls_solve,
)
from mole2d.synth import grid_walk

from conftest import random_instance


def test_condition_uncorrelated():
    b = GaussianBelief([1.0, 2.0, 3.0], np.diag([1.0, 2.0, 3.0]))
    c = condition(b, [1], [5])
    assert np.allclose(c.mean, [1.0, 3.0]) and np.allclose(c.covariance, np.diag([1.0, 3.0]))


def test_condition_example_against_density():
    b = GaussianBelief([0.02, 0.4], [[0.01, 0.0475], [0.0475, 0.25]])
    c = condition(b, [0], [0])
    assert c.mean[0] == pytest.approx(0.305, abs=1e-12)
    assert c.covariance[0, 0] == pytest.approx(0.024375, abs=1e-12)
    # direct oracle: normalize the joint density along x0 = 0
    mvn = scipy.stats.multivariate_normal(b.mean, b.covariance)
    x = np.linspace(-2, 3, 200_001)
    p = mvn.pdf(np.column_stack([np.zeros_like(x), x]))
    p /= np.trapezoid(p, x)
    mu = np.trapezoid(x * p, x)
    assert mu == pytest.approx(c.mean[0], abs=1e-8)
    assert np.trapezoid((x - mu) ** 2 * p, x) == pytest.approx(c.covariance[0, 0], abs=1e-8)


def _spd(rng, d):
    X = rng.normal(size=(d, d + 2))
    return X @ X.T + 0.1 * np.eye(d)


@given(st.integers(0, 10_000))
def test_condition_preserves_pd_and_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 7))
    b = GaussianBelief(rng.normal(size=d), _spd(rng, d))
    fixed = sorted(rng.choice(d, size=int(rng.integers(1, d)), replace=False).tolist())
    vals = rng.integers(-2, 3, size=len(fixed))
    c = condition(b, fixed, vals)
    assert c.dim == d - len(fixed)
    assert np.linalg.eigvalsh(c.covariance).min() > 0
    assert np.array_equal(c.covariance, c.covariance.T)
    # conditioning a second time on the same event changes nothing: add the fixed coords back with zero variance
    keep = [i for i in range(d) if i not in fixed]
    joint = GaussianBelief(b.mean, b.covariance)
    again = condition(joint, fixed, vals)
    assert np.allclose(again.mean, c.mean) and np.allclose(again.covariance, c.covariance)
    assert len(keep) == c.dim


def test_condition_in_two_steps_equals_joint():
    rng = np.random.default_rng(3)
    b = GaussianBelief(rng.normal(size=4), _spd(rng, 4))
    joint = condition(b, [0, 2], [1, -1])
    step = condition(condition(b, [0], [1]), [1], [-1])
    assert np.allclose(joint.mean, step.mean) and np.allclose(joint.covariance, step.covariance)


def test_condition_errors():
    b = GaussianBelief([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularBlock):
        condition(GaussianBelief([0.0, 0.0, 0.0], np.zeros((3, 3))), [0, 1], [0, 0])
    with pytest.raises(ValueError):
        condition(b, [0, 0], [1, 1])
    with pytest.raises(IndexError):
        condition(b, [5], [1])


def test_chi2_quantiles():
    assert chi2_quantile_1dof(0.9) == pytest.approx(2.7055, abs=1e-3)
    assert chi2_quantile_1dof(0.99) == pytest.approx(6.6349, abs=1e-3)
    # tighter check against an independent implementation
    for eta in (0.5, 0.9, 0.99, 0.999999, 1 - 1e-9):
        assert chi2_quantile_1dof(eta) == pytest.approx(scipy.stats.chi2.ppf(eta, 1), rel=1e-10)
    with pytest.raises(OutOfRange):
        chi2_quantile_1dof(1.0)
    with pytest.raises(OutOfRange):
        chi2_quantile_1dof(0.0)


@given(st.floats(0.5, 1 - 1e-9))
def test_chi2_quantile_inverts_cdf(eta):
    assert chi2_cdf_1dof(chi2_quantile_1dof(eta)) == pytest.approx(eta, abs=1e-6)


@given(st.floats(1e-12, 1 - 1e-12))
def test_normal_quantile_accuracy(p):
    assert abs(normal_quantile(p) - scipy.stats.norm.ppf(p)) < 1e-9


@given(st.floats(0.5, 0.999), st.floats(1e-6, 1e-3))
def test_chi2_quantile_monotone(eta, step):
    assert chi2_quantile_1dof(min(eta + step, 1 - 1e-12)) >= chi2_quantile_1dof(eta)


def test_tree_solve_interpolates():
    g = build_graph(4, [(0, 1, 0.3, 0.1), (1, 2, -0.2, 0.4), (3, 2, 1.0, 0.2)])
    _, A = incidence_matrices(g)
    x = weighted_ls_solve(A, g.variances, g.measurements)
    assert np.allclose(A.T @ x, g.measurements, atol=1e-14)
    assert not weighted_ls_solve(A, g.variances, np.zeros(3)).any()


def test_triangle_against_dense():
    g = build_graph(3, [(0, 1, 0.0, 1.0), (1, 2, 0.0, 1.0), (2, 0, 0.0, 1.0)])
    _, A = incidence_matrices(g)
    rhs = np.array([0.1, 0.2, -0.25])
    ref = np.linalg.solve(A @ A.T, A @ rhs)
    assert np.allclose(weighted_ls_solve(A, g.variances, rhs), ref, atol=1e-10, rtol=0)


def test_large_sparse_solve_residual():
    g = grid_walk(10, 10, 0.2, 0.1, seed=4).graph
    _, A = incidence_matrices(g, sparse=True)
    rng = np.random.default_rng(0)
    rhs = rng.normal(size=g.m)
    s = LaplacianSolver(A, g.variances)
    x = s.solve(rhs)
    b = A @ (rhs / g.variances)
    assert np.linalg.norm(s.L @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_disconnected_normal_matrix():
    A = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(NotPositiveDefinite):
        LaplacianSolver(A, [1.0, 1.0])


def test_projection_identity_fig1(fig1):
    _, A = incidence_matrices(fig1)
    for kind in (FCB_ODO, MCB):
        assert projection_identity_residual(A, cycle_basis(fig1, kind).toarray(), fig1.variances) < 1e-9


def test_projection_identity_tree():
    g = build_graph(3, [(0, 1, 0.1, 0.3), (1, 2, 0.1, 0.7)])
    _, A = incidence_matrices(g)
    assert projection_identity_residual(A, np.zeros((0, 2)), g.variances) < 1e-12


@given(st.integers(0, 10_000))
def test_projection_identity_random(seed):
    g = random_instance(seed, sigma=(0.05, 1.5)).graph
    _, A = incidence_matrices(g)
    assert projection_identity_residual(A, cycle_basis(g, MCB).toarray(), g.variances) < 1e-9
