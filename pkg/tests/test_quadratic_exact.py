from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsgkit import quadratic_exact as qe
from dsgkit.algorithms import RunConfig, accel_beta, run
from dsgkit.analysis import fixed_point
from dsgkit.errors import NonQuadraticSuite, RegimeViolation, UnstableSpectrum
from dsgkit.netgraph import Topology, build_mixing, shift_mixing
from dsgkit.objectives import ObjectiveSuite, QuadraticLocal, random_quadratic_suite, synthetic_logistic_suite
from dsgkit.oracles import lyapunov_iterate


def _scalar(q=1.0):
    return build_mixing(Topology.disconnected(1)), ObjectiveSuite.build([QuadraticLocal([[q]], [0.0])])


def test_single_node_scalar_examples():
    W, s = _scalar()
    sp = qe.aq_spectrum(W, 0.1, s)
    assert sp.mu_list == pytest.approx([0.9])
    assert qe.var_dsg_exact(sp, 1.0, 1, 0.1).var == pytest.approx(1 / 19, rel=1e-12)
    assert qe.var_dasg_exact(sp, 0.0, 1.0, 1, 0.1).var == pytest.approx(1 / 19, rel=1e-12)
    assert qe.rho_dasg_quadratic(sp, 0.0) == pytest.approx(0.9)


@given(st.floats(-0.95, 0.95), st.floats(0.01, 0.99), st.floats(0.01, 1.0))
def test_dasg_terms_beta_zero(m, beta, a):
    t0 = qe.var_dasg_exact(np.array([m]), 0.0, 1.0, 1, a).var
    assert t0 == pytest.approx(a * a / (1 - m * m), rel=1e-12)


def test_critical_damping_radius():
    # the accelerated momentum puts 1 - alpha mu exactly on the double root
    a, mu = 0.0625, 1.0
    b = accel_beta(a, mu)
    assert qe.rho_dasg_quadratic(np.array([1 - a * mu]), b) == pytest.approx(1 - math.sqrt(a * mu), abs=1e-15)


def test_commuting_reference_values(ref):
    a = 0.0625
    sp = qe.aq_spectrum(ref.W, a, ref.suite)
    assert max(abs(sp.mu_list)) == pytest.approx(0.9375)
    assert qe.rho_dasg_quadratic(sp, accel_beta(a, 1.0)) == pytest.approx(0.75)
    vs = qe.var_dsg_exact(sp, 1.0, 2, a)
    vd = qe.var_dasg_exact(sp, accel_beta(a, 1.0), 1.0, 2, a)
    assert vs.j_inf < vd.j_inf
    # J_inf normalises by sigma^2 N
    assert vs.var == pytest.approx(vs.j_inf * 3)


def _random_instance(seed, n, d):
    rng = np.random.default_rng(seed)
    edges = [[i, j] for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6]
    W = shift_mixing(build_mixing(Topology.custom(n, edges)), 1.0)
    s = random_quadratic_suite(n, d, mu=rng.uniform(0.2, 1.0), L=rng.uniform(1.5, 5.0), seed=seed)
    a = rng.uniform(0.05, 1.0) * W.lambda_min / s.lipschitz
    return W, s, a


@given(st.integers(0, 100_000), st.integers(1, 5), st.integers(1, 3))
def test_variances_match_lyapunov(seed, n, d):
    W, s, a = _random_instance(seed, n, d)
    sigma = 1.3
    sp = qe.aq_spectrum(W, a, s)
    A = qe.aq_matrix(W, a, s)
    nd = n * d
    lyap = lyapunov_iterate(A, a * a * sigma ** 2 / d * np.eye(nd))
    assert qe.var_dsg_exact(sp, sigma, d, a).var == pytest.approx(lyap.trace, rel=1e-8)
    b = accel_beta(a, s.mu)
    M = qe.dasg_matrix(W, a, b, s)
    Sw = np.zeros((2 * nd, 2 * nd))
    Sw[:nd, :nd] = a * a * sigma ** 2 / d * np.eye(nd)
    lyap2 = lyapunov_iterate(M, Sw)
    assert qe.var_dasg_exact(sp, b, sigma, d, a).var == pytest.approx(np.trace(lyap2.Sigma[:nd, :nd]), rel=1e-8)


@given(st.integers(0, 100_000), st.integers(1, 4), st.integers(1, 2))
def test_matrix_power_bound_valid_constant(seed, n, d):
    W, s, a = _random_instance(seed, n, d)
    sp = qe.aq_spectrum(W, a, s)
    b = accel_beta(a, s.mu)
    M = qe.dasg_matrix(W, a, b, s)
    r_ex = qe.rho_dasg_quadratic(sp, b)
    assert r_ex <= (1 - math.sqrt(a * s.mu)) * (1 + 1e-12)
    for k in (1, 5, 20):
        nrm = np.linalg.norm(np.linalg.matrix_power(M, k), 2)
        assert nrm <= qe.c_k_valid(sp, b, k) * r_ex ** k * (1 + 1e-9)


def test_matrix_power_bound_closed_form_constant_witness():
    # distinct roots: the closed-form constant lacks the factor 2 of the two-term power formula
    W, s, a = _random_instance(0, 3, 2)
    sp = qe.aq_spectrum(W, a, s)
    b = accel_beta(a, s.mu)
    gp, gm = qe.dasg_roots(sp.mu_list, b)
    assert np.min(np.abs(gp - gm)) > 0.2
    nrm = np.linalg.norm(np.linalg.matrix_power(qe.dasg_matrix(W, a, b, s), 5), 2)
    assert nrm > qe.c_k_constant(sp, a, s.mu, 5) * (1 - math.sqrt(a * s.mu)) ** 5
    assert nrm <= qe.c_k_valid(sp, b, 5) * qe.rho_dasg_quadratic(sp, b) ** 5


def test_matrix_power_bound_repeated_root_witness():
    # A repeated root gives a Jordan block whose norm exceeds its spectral radius,
    # so the 2k - 1 branch alone does not bound the power (see the decisions ledger).
    a, mu = 0.0625, 1.0
    b = accel_beta(a, mu)
    m = 1 - a * mu
    T = np.array([[(1 + b) * m, -b * m], [1.0, 0.0]])
    r = 1 - math.sqrt(a * mu)
    assert qe.rho_dasg_quadratic(np.array([m]), b) == pytest.approx(r)
    assert qe.c_k_constant(np.array([m]), a, mu, 1) == 1
    assert np.linalg.norm(T, 2) > 2 * r
    for k in (1, 5, 20):
        assert np.linalg.norm(np.linalg.matrix_power(T, k), 2) <= qe.c_k_valid(np.array([m]), b, k) * r ** k


def test_c_k_branches():
    a, mu = 0.0625, 1.0
    top = 1 - a * mu
    # endpoints only: the 2k - 1 branch
    assert qe.c_k_constant(np.array([top, 0.0]), a, mu, 5) == 9
    s = math.sqrt(a * mu)
    m = top / 2
    expect = (1 + s + (1 - s) * m) / (2 * math.sqrt(m * (top - m)))
    assert qe.c_k_constant(np.array([m]), a, mu, 1) == pytest.approx(expect)
    with pytest.raises(RegimeViolation):
        qe.c_k_constant(np.array([-0.1]), a, mu, 1)
    assert qe.c_k_general(np.array([0.5]), 0.0, 3) == 5


def test_finite_k_bounds_limits(ref):
    a = 0.0625
    sp = qe.aq_spectrum(ref.W, a, ref.suite)
    b = accel_beta(a, 1.0)
    for method, beta in (("dsg", 0.0), ("dasg", b)):
        r = qe.finite_k_bounds_quadratic([0, 10 ** 6], method=method, spectrum=sp, sigma=1.0, xi0_norm2=2.0,
                                         beta=beta)
        ex = (qe.var_dsg_exact(sp, 1.0, 2, a) if method == "dsg" else qe.var_dasg_exact(sp, b, 1.0, 2, a)).var
        assert r.bias[-1] == pytest.approx(0.0, abs=1e-300) and r.variance[-1] == pytest.approx(ex)
        assert r.variance[0] > ex
    r = qe.finite_k_bounds_quadratic(0, method="dsg", spectrum=sp, sigma=1.0, xi0_norm2=2.0)
    assert r.bias[0] == 2.0
    o = qe.finite_k_bounds_quadratic(0, method="dsg", spectrum=sp, sigma=1.0, xi0_norm2=2.0, target="opt",
                                     mu=1.0, L=4.0, lambda_n=0.5, C1=ref.C1, gamma=ref.W.gamma)
    assert o.bias[0] == 4.0 and o.network[0] > 0


@pytest.mark.parametrize("method", ["dsg", "dasg"])
def test_finite_k_bounds_dominate_simulation(ref, method):
    a = 0.0625
    sp = qe.aq_spectrum(ref.W, a, ref.suite)
    x_inf = fixed_point(ref.W, a, ref.suite)
    b = accel_beta(a, 1.0) if method == "dasg" else 0.0
    tr = run(RunConfig(method, alpha=a, iters=120, replicates=400, record_every=5, seed=8), ref.W, ref.suite,
             ref.noise, x_inf=x_inf)
    e0 = float(np.sum(x_inf ** 2))
    rate = "exact" if method == "dsg" else "accelerated"
    bnd = qe.finite_k_bounds_quadratic(tr.k, method=method, spectrum=sp, sigma=1.0,
                                       xi0_norm2=e0 if method == "dsg" else 2 * e0, beta=b, rate=rate, mu=1.0)
    assert np.all(tr.dist2_fixed <= bnd.total + 3 * tr.se["dist2_fixed"])


def test_node_average_bound_scales_with_N():
    Q = np.diag([1.0, 3.0])
    out = []
    for n in (2, 4):
        W = build_mixing(Topology.complete(n))
        W = shift_mixing(W, 1.0)
        s = ObjectiveSuite.build([QuadraticLocal(Q, [0.0, 0.0]) for _ in range(n)])
        sp = qe.aq_spectrum(W, 0.1, s)
        out.append(qe.node_avg_var_bound(sp, 0.3, 1.0, n, 2, 0.1))
    assert out[1] == pytest.approx(out[0] / 2)


def test_variance_increases_with_alpha(ref):
    a = np.linspace(0.005, 0.125, 25)
    v = [qe.var_dsg_exact(qe.aq_spectrum(ref.W, x, ref.suite), 1.0, 2, x).var for x in a]
    w = [qe.var_dasg_exact(qe.aq_spectrum(ref.W, x, ref.suite), accel_beta(x, 1.0), 1.0, 2, x).var for x in a]
    assert np.all(np.diff(v) > 0) and np.all(np.diff(w) > 0)


def test_guards():
    s = synthetic_logistic_suite(n_nodes=2, n_samples=10, d=2, seed=0)
    with pytest.raises(NonQuadraticSuite):
        qe.aq_matrix(build_mixing(Topology.ring(2)), 0.1, s)
    with pytest.raises(UnstableSpectrum):
        qe.var_dsg_exact(np.array([1.0, 0.2]), 1.0, 1, 0.1)
    with pytest.raises(UnstableSpectrum):
        qe.var_dasg_exact(np.array([0.99]), 1.5, 1.0, 1, 0.1)
    with pytest.raises(UnstableSpectrum):
        qe.finite_k_bounds_quadratic(0, method="dsg", spectrum=qe.QuadSpectrum(np.array([1.0]), 0.1, 1),
                                     sigma=1.0, xi0_norm2=1.0)
