"""Exact spectra, stationary variances and finite-k bounds for quadratic suites.

With ``f_i(x) = 1/2 x^T Q_i x - p_i^T x`` and isotropic noise
``Cov(w_i) = (sigma^2/d) I``, the error ``x^(k) - x^inf`` is a linear
Gaussian recursion driven by ``A_Q = W kron I - alpha Q``. Everything here is
expressed through the eigenvalues ``mu_i`` of that symmetric matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import BoundReport, _network_term, _report
from .errors import (DegenerateEigenvalue, NonQuadraticSuite, RegimeViolation, UnstableSpectrum,
                     ValidationError)
from .netgraph import MixingMatrix
from .objectives import ObjectiveSuite
from .oracles import dense_eigvalsh

GUARD = 1e-14


@dataclass(frozen=True)
class QuadSpectrum:
    """Eigenvalues of ``W kron I - alpha Q`` in non-increasing order."""

    mu_list: np.ndarray
    alpha: float
    d: int
    beta: float | None = None

    @property
    def N(self) -> int:
        return self.mu_list.size // self.d


@dataclass(frozen=True)
class ExactVariance:
    """Stationary ``lim Var(x^(k) - x^inf)`` and the normalised robustness ``J_inf``."""

    var: float
    j_inf: float


def aq_matrix(W: MixingMatrix, alpha: float, suite: ObjectiveSuite) -> np.ndarray:
    if suite.kind != "quadratic":
        raise NonQuadraticSuite("A_Q is only defined for quadratic suites")
    return np.kron(W.W, np.eye(suite.dim)) - alpha * suite.hessian_stack()


def aq_spectrum(W: MixingMatrix, alpha: float, suite: ObjectiveSuite, check: bool = True) -> QuadSpectrum:
    """Spectrum of ``A_Q`` by Jacobi; checks ``lambda_N - alpha L <= mu_i <= 1 - alpha mu``."""
    A = aq_matrix(W, alpha, suite)
    mu = dense_eigvalsh(A)
    if check:
        lo = W.lambda_min - alpha * suite.lipschitz - 1e-10
        hi = 1.0 - alpha * suite.mu + 1e-10
        if mu[-1] < lo or mu[0] > hi:
            raise ValidationError(
                f"eigenvalues [{mu[-1]:.6g}, {mu[0]:.6g}] of A_Q leave [{lo:.6g}, {hi:.6g}]; "
                "declared mu/L are inconsistent with the suite")
    return QuadSpectrum(mu, float(alpha), suite.dim)


def _mu(spectrum) -> np.ndarray:
    return np.asarray(spectrum.mu_list if isinstance(spectrum, QuadSpectrum) else spectrum, dtype=float)


def dasg_roots(mu_i, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Complex roots ``gamma_{i,+-}`` of ``z^2 - (1+beta) mu_i z + beta mu_i``."""
    mu_i = np.asarray(mu_i, dtype=complex)
    disc = np.sqrt((1.0 + beta) ** 2 * mu_i ** 2 - 4.0 * beta * mu_i)
    return ((1.0 + beta) * mu_i + disc) / 2.0, ((1.0 + beta) * mu_i - disc) / 2.0


def rho_dasg_quadratic(spectrum, beta: float) -> float:
    """Spectral radius of ``[[(1+beta) A_Q, -beta A_Q], [I, 0]]``.

    Discriminants within rounding of zero are treated as a double root, which
    keeps the critically damped case exact.
    """
    mu = _mu(spectrum)
    out = 0.0
    for m in mu:
        b2 = (1.0 + beta) ** 2 * m * m
        disc = b2 - 4.0 * beta * m
        if abs(disc) <= 1e-13 * max(b2, abs(4.0 * beta * m), 1e-300):
            r = abs((1.0 + beta) * m) / 2.0
        elif disc > 0:
            s = math.sqrt(disc)
            r = max(abs(((1.0 + beta) * m + s) / 2.0), abs(((1.0 + beta) * m - s) / 2.0))
        else:
            r = math.sqrt(beta * m)
        out = max(out, r)
    return out


def dasg_matrix(W: MixingMatrix, alpha: float, beta: float, suite: ObjectiveSuite) -> np.ndarray:
    """The explicit 2Nd x 2Nd D-ASG iteration matrix."""
    A = aq_matrix(W, alpha, suite)
    n = A.shape[0]
    return np.block([[(1.0 + beta) * A, -beta * A], [np.eye(n), np.zeros((n, n))]])


def var_dsg_exact(spectrum, sigma: float, d: int, alpha: float) -> ExactVariance:
    """``alpha^2 (sigma^2/d) sum 1/(1 - mu_i^2)`` and ``J_inf = alpha^2/(Nd) sum 1/(1 - mu_i^2)``."""
    mu = _mu(spectrum)
    if np.max(np.abs(mu)) >= 1.0:
        raise UnstableSpectrum(f"max |mu_i| = {np.max(np.abs(mu)):.6g} >= 1")
    s = float(np.sum(1.0 / (1.0 - mu * mu)))
    return ExactVariance(alpha ** 2 * sigma ** 2 / d * s, alpha ** 2 * s / mu.size)


def _dasg_terms(mu: np.ndarray, beta: float, alpha: float) -> np.ndarray:
    if rho_dasg_quadratic(mu, beta) >= 1.0:
        raise UnstableSpectrum("accelerated iteration matrix is not stable")
    one_m = 1.0 - mu
    d1 = 1.0 - beta * mu
    d2 = 2.0 + 2.0 * beta - one_m * (1.0 + 2.0 * beta)
    if np.any(np.abs(one_m) < GUARD) or np.any(np.abs(d1) < GUARD) or np.any(np.abs(d2) < GUARD):
        raise DegenerateEigenvalue("a variance denominator vanishes for this spectrum")
    return alpha ** 2 * (1.0 + beta * mu) / (one_m * d1 * d2)


def var_dasg_exact(spectrum, beta: float, sigma: float, d: int, alpha: float) -> ExactVariance:
    """``(sigma^2/d) sum alpha^2 (1+beta mu_i) / ((1-mu_i)(1-beta mu_i)(2+2beta-(1-mu_i)(1+2beta)))``."""
    mu = _mu(spectrum)
    t = _dasg_terms(mu, beta, alpha)
    s = float(np.sum(t))
    return ExactVariance(sigma ** 2 / d * s, s / mu.size)


def node_avg_var_bound(spectrum, beta: float, sigma: float, N: int, d: int, alpha: float) -> float:
    """Upper bound ``sigma^2/(N d) max_i term_i`` on each coordinate's stationary variance of the node average."""
    t = _dasg_terms(_mu(spectrum), beta, alpha)
    return float(sigma ** 2 / (N * d) * np.max(t))


def _check_regime(mu, alpha, mu_f, tol=1e-12):
    if np.any(mu < -tol) or np.any(mu > 1.0 - alpha * mu_f + tol):
        raise RegimeViolation("needs 0 <= mu_i <= 1 - alpha mu (lambda_N > 0 and alpha <= lambda_N/L)")


def c_k_constant(spectrum, alpha: float, mu: float, k: int) -> float:
    """Transient constant of the accelerated iteration matrix power bound.

    ``max(2k - 1, max over 0 < mu_i < 1 - alpha mu of
    (1 + s + (1 - s) mu_i) / (2 sqrt(mu_i (1 - alpha mu - mu_i))))`` with
    ``s = sqrt(alpha mu)``. Eigenvalues within 1e-12 of either end of the
    interval go to the ``2k - 1`` branch.
    """
    m = _mu(spectrum)
    _check_regime(m, alpha, mu)
    s = math.sqrt(alpha * mu)
    top = 1.0 - alpha * mu
    inside = m[(m > 1e-12) & (m < top - 1e-12)]
    best = float(2 * k - 1)
    if inside.size:
        vals = (1.0 + s + (1.0 - s) * inside) / (2.0 * np.sqrt(inside * (top - inside)))
        best = max(best, float(vals.max()))
    return best


def c_k_general(spectrum, beta: float, k: int) -> float:
    """General-momentum constant ``max(2k-1, max over distinct roots of (1 + max|g|^2)/|g+ - g-|)``."""
    gp, gm = dasg_roots(_mu(spectrum), beta)
    gap = np.abs(gp - gm)
    big = np.maximum(np.abs(gp), np.abs(gm))
    sel = gap > 1e-12
    best = float(2 * k - 1)
    if np.any(sel):
        best = max(best, float(np.max((1.0 + big[sel] ** 2) / gap[sel])))
    return best


def c_k_valid(spectrum, beta: float, k: int) -> float:
    """Constant with ``||A_dasg^k|| <= c_k_valid * rho_dasg^k`` for every spectrum.

    Per 2x2 block: distinct roots give ``2 (1 + max|g|^2) / |g+ - g-|`` (two
    terms of the power formula); a repeated root ``g`` gives
    ``k ||T|| / |g| + k - 1`` with the true norm of the Jordan-type block.
    ``c_k_constant`` drops the factor 2 and replaces ``||T||`` by ``|g|``.
    """
    mu = _mu(spectrum)
    r = rho_dasg_quadratic(mu, beta)
    gp, gm = dasg_roots(mu, beta)
    best = 0.0
    for m, p, q in zip(mu, gp, gm):
        big = max(abs(p), abs(q))
        gap = abs(p - q)
        if gap > 1e-12 * max(1.0, big):
            c = 2.0 * (1.0 + big * big) / gap
            best = max(best, c * (big / r) ** k if r > 0 else c)
        elif m != 0.0:
            T = np.array([[(1.0 + beta) * m, -beta * m], [1.0, 0.0]])
            g = abs((1.0 + beta) * m) / 2.0
            c = k * float(np.linalg.norm(T, 2)) / g + k - 1
            best = max(best, c * (g / r) ** k)
    return best


def finite_k_bounds_quadratic(k, *, method: str, spectrum: QuadSpectrum, sigma: float, xi0_norm2: float,
                              beta: float = 0.0, target: str = "fixed", rate: str = "exact", mu: float = 0.0,
                              C1: float = 0.0, gamma: float = 0.0, L: float = 0.0, lambda_n: float = 0.0
                              ) -> BoundReport:
    """Finite-iteration bounds for quadratic suites.

    D-SG: ``r^{2k}(||xi_0||^2 + alpha^2 sigma^2 N/(1-r^2)) + var_exact`` where
    ``r`` is ``max|mu_i|`` (``rate="exact"``) or ``1 - alpha mu``
    (``rate="simple"``). The distance-to-optimum form doubles the first
    two pieces and adds the network offset.

    D-ASG: ``C_k^2 r^{2k}(||xi_0||^2 + alpha^2 sigma^2 N/(1-r^2)) + var_exact``
    with ``r = rho_dasg`` and the general constant ``C_k``
    (``rate="exact"``), or ``r = 1 - sqrt(alpha mu)`` with the accelerated
    closed-form ``C_k`` (``rate="accelerated"``). ``xi_0`` stacks
    ``x^(0) - x^inf`` and ``x^(-1) - x^inf``. The distance-to-optimum form
    doubles the geometric piece only.
    """
    k = np.atleast_1d(np.asarray(k))
    mu_l = spectrum.mu_list
    a, d = spectrum.alpha, spectrum.d
    N = spectrum.N
    inputs = dict(method=method, alpha=a, beta=beta, sigma=sigma, N=N, d=d, xi0_norm2=xi0_norm2,
                  target=target, rate=rate, mu=mu, C1=C1, gamma=gamma)
    if method == "dsg":
        r = float(np.max(np.abs(mu_l))) if rate == "exact" else 1.0 - a * mu
        ex = var_dsg_exact(spectrum, sigma, d, a).var
        ck2 = np.ones(k.shape)
    elif method == "dasg":
        if rate == "exact":
            r = rho_dasg_quadratic(spectrum, beta)
            ck2 = np.array([c_k_general(spectrum, beta, int(kk)) for kk in k]) ** 2
        else:
            r = 1.0 - math.sqrt(a * mu)
            ck2 = np.array([c_k_constant(spectrum, a, mu, int(kk)) for kk in k]) ** 2
        ex = var_dasg_exact(spectrum, beta, sigma, d, a).var
    else:
        raise ValidationError(f"unknown method {method!r}")
    if not r < 1:
        raise UnstableSpectrum("contraction factor is not below one")
    inputs["rho"] = r
    geo = ck2 * r ** (2.0 * k)
    bias = geo * xi0_norm2
    var = geo * a ** 2 * sigma ** 2 * N / (1.0 - r * r) + ex
    net = 0.0
    if target == "opt":
        bias = 2.0 * bias
        var = 2.0 * (var - ex) + (2.0 * ex if method == "dsg" else ex)
        net = _network_term(a, mu, L, lambda_n, C1, gamma, N)
    elif target != "fixed":
        raise ValidationError(f"unknown target {target!r}")
    return _report(method, k, bias, var, net, inputs)
