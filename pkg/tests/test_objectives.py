from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsgkit.errors import DimensionMismatch, ValidationError
from dsgkit.objectives import (LogisticLocal, ObjectiveSuite, QuadraticLocal, c1_constant, global_minimizer,
                               grad_local, random_quadratic_suite, stacked_grad, suite_constants,
                               synthetic_logistic_suite)
from dsgkit.oracles import fd_gradient


@pytest.fixture(scope="module")
def small_logistic():
    return synthetic_logistic_suite(n_nodes=3, n_samples=60, d=4, seed=2)


def test_quadratic_grad_zero_at_local_minimizer():
    s = random_quadratic_suite(3, 3, seed=4)
    for i, f in enumerate(s.locals):
        assert np.allclose(grad_local(s, i, f.minimizer()), 0.0, atol=1e-12)


def test_logistic_grad_zero_by_symmetry():
    X = np.array([[1.0, 2.0], [-1.0, -2.0], [0.5, -1.0], [-0.5, 1.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    f = LogisticLocal(X, y, 0.05)
    assert np.allclose(f.grad(np.zeros(2)), 0.0, atol=1e-15)


def test_grad_matches_finite_differences(small_logistic, rng):
    for suite in (small_logistic, random_quadratic_suite(3, 4, seed=1)):
        for i, f in enumerate(suite.locals):
            x = rng.standard_normal(suite.dim)
            g = grad_local(suite, i, x)
            fd = fd_gradient(f.value, x)
            assert np.linalg.norm(fd - g) <= 1e-5 * max(np.linalg.norm(g), 1e-12)


def test_global_minimizer_examples():
    s = ObjectiveSuite.build([QuadraticLocal(np.eye(2), [1.0, 2.0])])
    assert np.allclose(global_minimizer(s), [1.0, 2.0])
    s = ObjectiveSuite.build([QuadraticLocal(np.eye(2), [0.0, 0.0]), QuadraticLocal(np.eye(2), [2.0, 0.0])])
    assert np.allclose(global_minimizer(s), [1.0, 0.0])


def test_logistic_minimizer_residual(small_logistic):
    s = small_logistic
    assert np.linalg.norm(s.global_grad(s.x_star)) <= 1e-10
    # heterogeneity: stacked gradient at consensus x* is nonzero but sums to zero
    g = s.grad(np.broadcast_to(s.x_star, (s.n, s.dim)))
    assert s.grad_at_xstar_norm == pytest.approx(np.linalg.norm(g))
    assert np.linalg.norm(g.sum(axis=0)) <= 1e-9


def test_suite_constants_examples():
    s = ObjectiveSuite.build([QuadraticLocal(2.5 * np.eye(3), np.ones(3)) for _ in range(2)])
    assert suite_constants(s) == pytest.approx((2.5, 2.5))
    assert s.kappa == pytest.approx(1.0)
    z = ObjectiveSuite.build([LogisticLocal(np.zeros((5, 3)), np.ones(5), 0.05)])
    assert suite_constants(z) == pytest.approx((0.1, 0.1))


def test_logistic_lipschitz_formula(small_logistic):
    tops = [np.linalg.eigvalsh(f.X.T @ f.X)[-1] / (4 * f.n) for f in small_logistic.locals]
    assert small_logistic.lipschitz == pytest.approx(0.1 + max(tops), rel=1e-10)
    assert small_logistic.mu == pytest.approx(0.1)


def test_c1_examples():
    s = ObjectiveSuite.build([QuadraticLocal(np.eye(2), np.zeros(2)) for _ in range(3)])
    assert c1_constant(s) == 0.0
    s = ObjectiveSuite.build([QuadraticLocal([[1.0]], [0.0])])
    assert c1_constant(s) == 0.0
    locs = [QuadraticLocal([[1.0]], [a], a * a / 2) for a in (1.0, -1.0)]
    s = ObjectiveSuite.build(locs)
    # f_i(0) - f_i* = 1/2 each; sqrt(2 * 1 * 1) * (1 + 2 * 2 / 1)
    assert c1_constant(s) == pytest.approx(math.sqrt(2.0) * 5.0, rel=1e-14)


def test_stacked_grad_examples(rng):
    s = random_quadratic_suite(3, 2, seed=8)
    mins = np.concatenate([f.minimizer() for f in s.locals])
    assert np.allclose(stacked_grad(s, mins), 0.0, atol=1e-12)
    one = random_quadratic_suite(1, 3, seed=2)
    x = rng.standard_normal(3)
    assert np.array_equal(stacked_grad(one, x), grad_local(one, 0, x))
    x = rng.standard_normal(6)
    fd = fd_gradient(lambda z: float(s.F(z.reshape(3, 2))), x)
    g = stacked_grad(s, x)
    assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)
    with pytest.raises(DimensionMismatch):
        stacked_grad(s, np.zeros(5))
    with pytest.raises(DimensionMismatch):
        grad_local(s, 0, np.zeros(3))


def test_quadratic_fi_star_matches_numeric_minimum():
    s = random_quadratic_suite(3, 3, seed=5)
    for f, fs in zip(s.locals, s.f_i_star):
        x = np.zeros(3)
        for _ in range(5000):
            x = x - f.grad(x) / 4.0
        assert f.value(x) == pytest.approx(fs, abs=1e-8)


def test_mixed_kinds_rejected():
    with pytest.raises(ValidationError):
        ObjectiveSuite.build([QuadraticLocal(np.eye(1), [0.0]), LogisticLocal([[1.0]], [1.0], 0.1)])


def test_synthetic_split():
    s = synthetic_logistic_suite(n_nodes=10, n_samples=1000, d=5, seed=0)
    assert [f.n for f in s.locals] == [100] * 10


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_curvature_bounds_sampled(seed, n, d):
    s = random_quadratic_suite(n, d, mu=0.5, L=3.0, seed=seed)
    rng = np.random.default_rng(seed)
    for _ in range(25):
        x, y = rng.standard_normal((2, n, d))
        inner = np.sum((s.grad(x) - s.grad(y)) * (x - y), axis=-1)
        dist = np.sum((x - y) ** 2, axis=-1)
        assert np.all(s.mu * dist <= inner * (1 + 1e-12) + 1e-12)
        assert np.all(inner <= s.lipschitz * dist * (1 + 1e-12) + 1e-12)
    assert np.linalg.norm(s.global_grad(s.x_star)) <= 1e-8 * max(1.0, np.abs(s.P).max())


def test_logistic_curvature_sampled(small_logistic, rng):
    s = small_logistic
    for _ in range(200):
        x, y = rng.standard_normal((2, s.n, s.dim)) * 3
        inner = np.sum((s.grad(x) - s.grad(y)) * (x - y), axis=-1)
        dist = np.sum((x - y) ** 2, axis=-1)
        assert np.all(s.mu * dist <= inner + 1e-12)
        assert np.all(inner <= s.lipschitz * dist + 1e-12)
