from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsgkit import quadratic_exact as qe
from dsgkit.algorithms import accel_beta
from dsgkit.analysis import (PenalizedObjective, alpha_bar, certified_rho, dasg_bound, dasg_bound_general,
                             dsg_bound, fixed_point, fixed_point_residual, hat_alpha_relative, j_tot,
                             lyapunov_value, masg_any_k_bound, masg_complexity, masg_one_stage_bound,
                             masg_stage_bound, mi_check, mi_matrices, rho_dsg, s_alpha, tradeoff_alpha,
                             tradeoff_G, tradeoff_G_prime, v_s_alpha)
from dsgkit.errors import (AlphaOutOfRange, Assumption3Violated, DeltaOutOfRange, InvalidRho, NonPSDInput,
                           ParameterOutOfRange)
from dsgkit.netgraph import Topology, build_mixing
from dsgkit.objectives import random_quadratic_suite

MU, L, LAM = 1.0, 4.0, 0.5


def test_rho_dsg_examples():
    assert rho_dsg(0.0625, MU, L, LAM) == pytest.approx(0.9375)
    assert rho_dsg(0.2, MU, L, LAM) == pytest.approx(0.8)
    assert rho_dsg(0.3, MU, L, LAM) == pytest.approx(0.7)
    with pytest.raises(AlphaOutOfRange):
        rho_dsg(0.375, MU, L, LAM)


@given(st.floats(1e-4, 0.3749))
def test_rho_dsg_below_one(alpha):
    assert 0 <= rho_dsg(alpha, MU, L, LAM) < 1


def test_dsg_bound_trivial_cases():
    kw = dict(mu=MU, L=L, lambda_n=LAM, sigma=1.0, N=3, dist0_fixed2=2.5)
    r = dsg_bound(0, 0.05, **kw)
    assert r.bias[0] == pytest.approx(2.5) and r.variance[0] == 0.0
    r = dsg_bound(np.arange(50), 0.05, **{**kw, "sigma": 0.0})
    assert np.all(r.variance == 0.0)
    c = dsg_bound(np.arange(50), 0.05, form="simple", **kw)
    assert np.all(np.diff(c.total) <= 1e-15)
    o = dsg_bound(10, 0.05, target="opt", C1=2.0, gamma=0.5, **kw)
    assert o.network[0] == pytest.approx(2 * 0.05 ** 2 * 4.0 * 3 / 0.25)
    assert o.bias[0] == pytest.approx(2 * c.bias[10]) and o.variance[0] == pytest.approx(2 * c.variance[10])
    with pytest.raises(AlphaOutOfRange):
        dsg_bound(1, 0.25, target="opt", **kw)
    with pytest.raises(ParameterOutOfRange):
        dsg_bound(1, 0.05, form="bogus", **kw)


def test_dsg_bound_dominates_exact_variance(ref):
    for a in (0.02, 0.0625, 0.2):
        sp = qe.aq_spectrum(ref.W, a, ref.suite)
        exact = qe.var_dsg_exact(sp, 1.0, 2, a).var
        bnd = dsg_bound(1e9, a, dist0_fixed2=0.0, **ref.bound_kwargs())
        assert bnd.variance[0] >= exact * (1 - 1e-12)


def test_s_alpha_examples():
    mu = 2.0
    S = s_alpha(1 / mu, mu)
    assert np.allclose(S, [[mu / 2, 0.0], [0.0, 0.0]], atol=1e-15)
    for a in (0.01, 0.125, 3.0):
        S = s_alpha(a, mu)
        assert S[0, 0] == pytest.approx(1 / (2 * a))
        n2 = 1 / a + mu / 2 - math.sqrt(mu / a)
        assert np.allclose(S @ S, n2 * S, rtol=1e-12, atol=1e-12)
        assert S[1, 1] == pytest.approx((1 - math.sqrt(a * mu)) ** 2 / (2 * a))
    with pytest.raises(AlphaOutOfRange):
        s_alpha(0.0, 1.0)


@pytest.mark.parametrize("lam", [0.2, 0.5, 1.0])
def test_mi_certified_grid(lam):
    for a in np.linspace(1e-4, lam / L, 25):
        cert = mi_check(a, accel_beta(a, MU), certified_rho(a, MU), s_alpha(a, MU), MU, L, lam)
        assert cert.feasible, (a, cert.min_eig_slack)


def test_mi_stricter_rate_infeasible():
    # witness: alpha = 0.05 on (mu, L, lambda_N) = (1, 4, 0.5)
    a = 0.05
    P = s_alpha(a, MU)
    b = accel_beta(a, MU)
    assert not mi_check(a, b, 0.999 * certified_rho(a, MU), P, MU, L, LAM).feasible
    literal = mi_check(a, b, 1 - math.sqrt(a * MU), P, MU, L, LAM)
    assert literal.min_eig_slack < -0.5


def test_mi_beta_zero_needs_admissible_alpha():
    hi = (1 + LAM) / L
    rng = np.random.default_rng(0)
    Ps = [B @ B.T for B in rng.standard_normal((300, 2, 2)) * rng.uniform(0.1, 5, (300, 1, 1))]
    found = []
    for a in np.linspace(0.02, 0.6, 30):
        if any(mi_check(a, 0.0, r, P, MU, L, LAM).feasible for r in (0.9, 0.95, 0.99, 0.995) for P in Ps):
            found.append(a)
    assert found and max(found) < hi


def test_mi_errors_and_structure():
    with pytest.raises(InvalidRho):
        mi_check(0.1, 0.5, 1.0, np.eye(2), MU, L, LAM)
    with pytest.raises(NonPSDInput):
        mi_check(0.1, 0.5, 0.5, -np.eye(2), MU, L, LAM)
    with pytest.raises(NonPSDInput):
        mi_check(0.1, 0.5, 0.5, [[1.0, 0.2], [0.0, 1.0]], MU, L, LAM)
    A, B, X1, X2 = mi_matrices(0.1, 0.0, MU, L, LAM)
    assert np.allclose(A, [[1, 0], [1, 0]]) and np.allclose(B, [[-0.1], [0]])
    assert np.allclose(X1, X1.T) and np.allclose(X2, X2.T)


def test_mi_corner_equals_penalized_smoothness():
    # alpha (1 + lambda_N - L alpha) = alpha (2 - L_alpha alpha) with L_alpha = (1-lambda_N)/alpha + L
    W = build_mixing(Topology.disconnected(2))
    W = type(W).from_matrix(np.array([[0.75, 0.25], [0.25, 0.75]]))
    s = random_quadratic_suite(2, 2, mu=MU, L=L, seed=0)
    for a in (0.01, 0.1, 0.3):
        La = PenalizedObjective(W, a, s).L_alpha
        _, _, X1, _ = mi_matrices(a, 0.3, MU, L, W.lambda_min)
        assert X1[2, 2] == pytest.approx(a * (2 - La * a) / 2, rel=1e-12)


def test_lyapunov_value_examples(ref, rng):
    x_inf = fixed_point(ref.W, 0.1, ref.suite)
    xi = rng.standard_normal((2, 3, 2))
    assert lyapunov_value(np.eye(2), 0.0, 0.1, xi, ref.W, ref.suite, x_inf) == pytest.approx(np.sum(xi ** 2))
    assert lyapunov_value(s_alpha(0.1, 1.0), 1.0, 0.1, np.zeros(12), ref.W, ref.suite, x_inf) == 0.0
    assert v_s_alpha(0.1, ref.W, ref.suite, rng.standard_normal((3, 2)), x_inf) > 0


def test_dasg_bound_dominates_exact_variance(ref):
    kw = ref.bound_kwargs()
    for a in (0.01, 0.0625, 0.125):
        sp = qe.aq_spectrum(ref.W, a, ref.suite)
        exact = qe.var_dasg_exact(sp, accel_beta(a, 1.0), 1.0, 2, a).var
        b = dasg_bound(1e9, a, V0=0.0, **kw)
        assert b.variance[0] >= exact
    b = dasg_bound(0, 0.0625, V0=3.0, **kw)
    assert b.bias[0] == pytest.approx(6.0)
    with pytest.raises(AlphaOutOfRange):
        dasg_bound(0, 0.2, V0=1.0, **kw)
    with pytest.raises(Assumption3Violated):
        dasg_bound(0, 0.01, V0=1.0, **{**kw, "lambda_n": 0.0})


def test_dasg_bound_general_from_certificate(ref):
    a = 0.0625
    cert = mi_check(a, accel_beta(a, 1.0), certified_rho(a, 1.0), s_alpha(a, 1.0), 1.0, 4.0, 0.5)
    g = dasg_bound_general(np.arange(5), cert, V0=1.0, **ref.bound_kwargs())
    assert g.bias[0] == pytest.approx(2.0)
    assert np.allclose(g.bias[1:] / g.bias[:-1], 1 - math.sqrt(a))
    bad = mi_check(a, accel_beta(a, 1.0), 0.5, s_alpha(a, 1.0), 1.0, 4.0, 0.5)
    with pytest.raises(ParameterOutOfRange):
        dasg_bound_general(0, bad, V0=1.0, **ref.bound_kwargs())


TRADE = dict(mu=MU, L=L, lambda_n=LAM, sigma=1.0, N=3, C1=2.0, gamma=0.5)


def test_tradeoff_examples():
    t = tradeoff_alpha(0.0, **TRADE)
    assert t.alpha_star == pytest.approx(alpha_bar(MU, L, LAM)) == pytest.approx(0.125)
    hi = 1 / t.rho_star - 1
    t_hi = tradeoff_alpha(hi, **TRADE)
    assert t_hi.alpha_star == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DeltaOutOfRange):
        tradeoff_alpha(hi + 1e-3, **TRADE)
    with pytest.raises(DeltaOutOfRange):
        tradeoff_alpha(-0.1, **TRADE)


def test_tradeoff_G_increasing():
    z = np.linspace(1e-3, math.sqrt(0.125), 200)
    assert np.all(tradeoff_G_prime(z, **TRADE) > 0)
    G = tradeoff_G(z, **TRADE)
    assert np.all(np.diff(G) > 0)
    h = 1e-6
    fd = (tradeoff_G(z + h, **TRADE) - tradeoff_G(z - h, **TRADE)) / (2 * h)
    assert np.allclose(fd, tradeoff_G_prime(z, **TRADE), rtol=1e-6)


@pytest.mark.parametrize("delta", [0.01, 0.05, 0.1])
def test_tradeoff_minimizes_on_grid(delta):
    t = tradeoff_alpha(delta, **TRADE)
    grid = np.linspace(1e-5, t.alpha_bar, 4000)
    ok = grid[1 - np.sqrt(grid * MU) <= (1 + delta) * t.rho_star * (1 + 1e-12)]
    assert t.alpha_star <= ok.min() * (1 + 1e-9)
    assert t.j_tot <= j_tot(ok, **{k: v for k, v in TRADE.items()}).min() * (1 + 1e-9)


def test_j_tot_scales_with_N():
    a = np.array([0.01, 0.05])
    assert np.allclose(j_tot(a, **{**TRADE, "N": 6}), 2 * j_tot(a, **TRADE))


def test_masg_stage_bounds():
    kw = dict(k1=20, p=7.0, mu=MU, L=L, lambda_n=LAM, sigma=1.0, N=3, dist0_opt2=4.0)
    r = masg_stage_bound(np.arange(6), **kw)
    assert np.allclose(r.variance[1:] / r.variance[:-1], 0.5)
    assert np.all(np.diff(r.bias) < 0)
    n = masg_stage_bound(np.arange(4), C1=1.0, gamma=0.5, **kw)
    assert np.allclose(n.network[1:] / n.network[:-1], 1 / 16)
    with pytest.raises(ParameterOutOfRange):
        masg_stage_bound(1, **{**kw, "p": 5.0})
    one = masg_one_stage_bound(np.arange(100), 0.1, **{k: v for k, v in kw.items() if k not in ("k1", "p")})
    assert one.bias[0] == pytest.approx(16.0)
    anyk = masg_any_k_bound(np.arange(21, 100), **kw)
    assert np.all(np.diff(anyk.total) < 0) and anyk.flags


def test_masg_complexity_monotone():
    eps = np.logspace(-4, 0, 30)
    c = masg_complexity(eps, delta0=1.0, sigma=1.0, N=3, mu=MU, kappa_tilde=10.0, C1=1.0, gamma=0.5)
    assert np.all(np.diff(c) < 0)
    with pytest.raises(ParameterOutOfRange):
        masg_complexity(0.0, delta0=1.0, sigma=1.0, N=3, mu=MU, kappa_tilde=10.0, C1=0.0, gamma=0.5)


def test_hat_alpha_examples():
    assert hat_alpha_relative(MU, L, LAM, 0.0) == pytest.approx(LAM / L)
    assert hat_alpha_relative(MU, L, LAM, 1.0) == pytest.approx(1 / 3600)
    assert hat_alpha_relative(10.0, L, LAM, 0.01) == pytest.approx(LAM / L)
    with pytest.raises(ParameterOutOfRange):
        hat_alpha_relative(MU, L, LAM, -1.0)


def test_fixed_point_examples(ref, rng):
    s = random_quadratic_suite(3, 2, seed=6)
    I = build_mixing(Topology.disconnected(3))
    x = fixed_point(I, 0.1, s)
    assert np.allclose(x, np.stack([f.minimizer() for f in s.locals]), atol=1e-10)
    for a in (0.02, 0.06, 0.12):
        x = fixed_point(ref.W, a, ref.suite)
        assert fixed_point_residual(ref.W, a, ref.suite, x) <= 1e-10
        gap = np.linalg.norm(x - ref.suite.x_star)
        assert gap <= ref.C1 * a / (1 - ref.W.gamma)
    with pytest.raises(AlphaOutOfRange):
        fixed_point(ref.W, 0.0, ref.suite)


def test_fixed_point_logistic_is_penalized_minimizer():
    from dsgkit.objectives import synthetic_logistic_suite
    s = synthetic_logistic_suite(n_nodes=3, n_samples=60, d=3, seed=1)
    W = build_mixing(Topology.ring(3))
    x = fixed_point(W, 0.2, s)
    assert np.linalg.norm(PenalizedObjective(W, 0.2, s).grad(x)) * 0.2 <= 1e-10


def test_report_serialization():
    r = dsg_bound([0, 1], 0.05, mu=MU, L=L, lambda_n=LAM, sigma=1.0, N=3, dist0_fixed2=1.0,
                  target="opt", C1=1.0, gamma=1.0)
    d = r.to_dict()
    assert d["network"] == ["inf", "inf"] and d["method"] == "dsg"
    assert np.allclose(r.total, r.bias + r.variance + r.network)
