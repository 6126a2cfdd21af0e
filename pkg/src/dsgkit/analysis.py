"""Closed-form rates, robustness levels and error bounds for general strongly convex suites.

All bounds are returned as :class:`BoundReport` objects with separate bias,
variance and network arrays so callers can compare each component.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import (AlphaOutOfRange, Assumption3Violated, DeltaOutOfRange, InvalidRho,
                     NoConvergence, NonPSDInput, ParameterOutOfRange)
from .netgraph import MixingMatrix
from .objectives import ObjectiveSuite
from .oracles import dense_eigvalsh

MI_TOL = -1e-10


# ---------------------------------------------------------------------------
# reports


@dataclass
class BoundReport:
    """Bias/variance/network decomposition of an error bound over ``k``."""

    method: str
    k: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    network: np.ndarray
    inputs: dict[str, Any]
    j_inf: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def total(self) -> np.ndarray:
        return self.bias + self.variance + self.network

    def to_dict(self) -> dict[str, Any]:
        def clean(v):
            if isinstance(v, np.ndarray):
                return [clean(x) for x in v.tolist()]
            if isinstance(v, float) and not math.isfinite(v):
                return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
            return v
        return {
            "method": self.method,
            "k": clean(np.asarray(self.k)),
            "bias": clean(self.bias),
            "variance": clean(self.variance),
            "network": clean(self.network),
            "total": clean(self.total),
            "j_inf": clean(self.j_inf) if self.j_inf is not None else None,
            "flags": list(self.flags),
            "inputs": {k: clean(v) for k, v in sorted(self.inputs.items())},
        }


def _report(method, k, bias, variance, network, inputs, j_inf=None, flags=()):
    k = np.atleast_1d(np.asarray(k))
    shape = k.shape
    arr = [np.broadcast_to(np.asarray(t, dtype=float), shape).copy() for t in (bias, variance, network)]
    return BoundReport(method, k, *arr, inputs=dict(inputs), j_inf=j_inf, flags=list(flags))


# ---------------------------------------------------------------------------
# fixed point and penalized objective


@dataclass(frozen=True)
class PenalizedObjective:
    """``F_{W,alpha}(x) = x^T (I - W) x / (2 alpha) + F(x)`` on (N, d) arrays."""

    W: MixingMatrix
    alpha: float
    suite: ObjectiveSuite

    @property
    def L_alpha(self) -> float:
        return (1.0 - self.W.lambda_min) / self.alpha + self.suite.lipschitz

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        lap = x - self.W.W @ x
        return float(np.sum(x * lap) / (2.0 * self.alpha) + self.suite.F(x))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.W.W @ x) / self.alpha + self.suite.grad(x)


def penalized_objective(W: MixingMatrix, alpha: float, suite: ObjectiveSuite) -> PenalizedObjective:
    if not alpha > 0:
        raise AlphaOutOfRange("alpha must be positive")
    return PenalizedObjective(W, alpha, suite)


def fixed_point_residual(W: MixingMatrix, alpha: float, suite: ObjectiveSuite, x) -> float:
    """``||(I - W) x + alpha grad F(x)||``."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - W.W @ x + alpha * suite.grad(x)))


def fixed_point(W: MixingMatrix, alpha: float, suite: ObjectiveSuite, tol: float = 1e-10,
                max_iter: int = 10_000_000) -> np.ndarray:
    """Limit point of noiseless D-SG, returned with shape (N, d).

    Quadratic suites: one linear solve of ``((I - W) kron I + alpha Q) x = alpha p``
    followed by iterative refinement. Otherwise gradient descent on the
    penalized objective with step ``1/L_alpha``.
    """
    if not alpha > 0:
        raise AlphaOutOfRange("alpha must be positive")
    N, d = suite.n, suite.dim
    if suite.kind == "quadratic":
        M = np.kron(np.eye(N) - W.W, np.eye(d)) + alpha * suite.hessian_stack()
        rhs = alpha * suite.P.reshape(-1)
        x = np.linalg.solve(M, rhs)
        for _ in range(3):
            r = rhs - M @ x
            if np.linalg.norm(r) <= 1e-3 * tol:
                break
            x = x + np.linalg.solve(M, r)
        x = x.reshape(N, d)
        res = fixed_point_residual(W, alpha, suite, x)
        if res > tol:
            raise NoConvergence(f"fixed-point residual {res:.3e} above {tol:.1e}")
        return x
    pen = PenalizedObjective(W, alpha, suite)
    step = 1.0 / pen.L_alpha
    x = np.broadcast_to(suite.x_star, (N, d)).copy()
    for _ in range(max_iter):
        g = pen.grad(x)
        if alpha * np.linalg.norm(g) <= tol:
            return x
        x = x - step * g
    raise NoConvergence("gradient descent on the penalized objective hit the iteration cap")


# ---------------------------------------------------------------------------
# D-SG


def rho_dsg(alpha: float, mu: float, L: float, lambda_n: float) -> float:
    """``max(|1 - alpha mu|, |lambda_N - alpha L|)`` for ``0 < alpha < (1+lambda_N)/L``."""
    if not (0 < alpha < (1.0 + lambda_n) / L):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, (1+lambda_N)/L) = (0, {(1 + lambda_n) / L:.6g})")
    return max(abs(1.0 - alpha * mu), abs(lambda_n - alpha * L))


def _network_term(alpha, mu, L, lambda_n, C1, gamma, N, factor=2.0):
    cap = min((1.0 + lambda_n) / L, 1.0 / (L + mu))
    if alpha > cap * (1 + 1e-12):
        raise AlphaOutOfRange(f"network term needs alpha <= {cap:.6g}")
    if C1 == 0:
        return 0.0
    if gamma >= 1.0:
        return math.inf
    return factor * alpha ** 2 * C1 ** 2 * N / (1.0 - gamma) ** 2


def dsg_bound(k, alpha: float, *, mu: float, L: float, lambda_n: float, sigma: float, N: int,
              dist0_fixed2: float, C1: float = 0.0, gamma: float = 0.0, form: str = "exact",
              target: str = "fixed") -> BoundReport:
    """D-SG mean-squared error bound.

    ``form="exact"`` uses the rate ``rho(alpha)``; ``form="simple"`` the
    rate ``1 - alpha mu`` (requires ``alpha < (1+lambda_N)/(L+mu)``).
    ``target="opt"`` bounds the distance to x* (simple form, doubled
    terms plus the network offset, requires ``alpha <= 1/(L+mu)``).
    """
    k = np.asarray(k, dtype=float)
    inputs = dict(alpha=alpha, beta=0.0, sigma=sigma, N=N, mu=mu, L=L, lambda_n=lambda_n,
                  C1=C1, gamma=gamma, dist0_fixed2=dist0_fixed2, form=form, target=target)
    if target == "opt":
        form = "simple"
    if form == "exact":
        rho = rho_dsg(alpha, mu, L, lambda_n)
        r2k = rho ** (2 * k)
        bias = r2k * dist0_fixed2
        var = (1.0 - r2k) / (1.0 - rho ** 2) * sigma ** 2 * alpha ** 2 * N
        j_inf = alpha ** 2 / (1.0 - rho ** 2)
    elif form == "simple":
        if not (0 < alpha < (1.0 + lambda_n) / (L + mu)):
            raise AlphaOutOfRange(f"simple form needs 0 < alpha < (1+lambda_N)/(L+mu)")
        q = 1.0 - alpha * mu
        r2k = q ** (2 * k)
        bias = r2k * dist0_fixed2
        var = alpha * sigma ** 2 * N * (1.0 - r2k) / (mu * (2.0 - alpha * mu))
        j_inf = alpha / (mu * (2.0 - alpha * mu))
        rho = q
    else:
        raise ParameterOutOfRange(f"unknown form {form!r}")
    net = 0.0
    if target == "opt":
        if alpha > 1.0 / (L + mu):
            raise AlphaOutOfRange("distance-to-optimum bound needs alpha <= 1/(L+mu)")
        bias, var = 2.0 * bias, 2.0 * var
        net = _network_term(alpha, mu, L, lambda_n, C1, gamma, N)
    elif target != "fixed":
        raise ParameterOutOfRange(f"unknown target {target!r}")
    inputs["rho"] = rho
    return _report("dsg", k, bias, var, net, inputs, j_inf=j_inf)


# ---------------------------------------------------------------------------
# matrix inequality for D-ASG


@dataclass(frozen=True)
class MICertificate:
    alpha: float
    beta: float
    rho: float
    P_tilde: np.ndarray
    min_eig_slack: float
    residual: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.min_eig_slack >= MI_TOL

    def to_dict(self) -> dict[str, Any]:
        return {"alpha": self.alpha, "beta": self.beta, "rho": self.rho,
                "P_tilde": self.P_tilde.tolist(), "min_eig_slack": self.min_eig_slack,
                "feasible": self.feasible}


def s_alpha(alpha: float, mu: float) -> np.ndarray:
    """Rank-one ``v v^T`` with ``v = (1/sqrt(2 alpha), sqrt(mu/2) - 1/sqrt(2 alpha))``."""
    if not alpha > 0:
        raise AlphaOutOfRange("alpha must be positive")
    v = np.array([1.0 / math.sqrt(2.0 * alpha), math.sqrt(mu / 2.0) - 1.0 / math.sqrt(2.0 * alpha)])
    return np.outer(v, v)


def mi_matrices(alpha, beta, mu, L, lambda_n):
    """``(A, B, X1, X2)`` of the 3x3 D-ASG matrix inequality."""
    A = np.array([[1.0 + beta, -beta], [1.0, 0.0]])
    B = np.array([[-alpha], [0.0]])
    c = alpha * (1.0 + lambda_n - L * alpha) / 2.0
    X1 = np.array([[beta ** 2 * mu / 2, -beta ** 2 * mu / 2, -beta / 2],
                   [-beta ** 2 * mu / 2, beta ** 2 * mu / 2, beta / 2],
                   [-beta / 2, beta / 2, c]])
    X2 = np.array([[(1 + beta) ** 2 * mu / 2, -beta * (1 + beta) * mu / 2, -(1 + beta) / 2],
                   [-beta * (1 + beta) * mu / 2, beta ** 2 * mu / 2, beta / 2],
                   [-(1 + beta) / 2, beta / 2, c]])
    return A, B, X1, X2


def mi_check(alpha: float, beta: float, rho: float, P_tilde, mu: float, L: float,
             lambda_n: float) -> MICertificate:
    """Evaluate ``rho^2 X1 + (1-rho^2) X2 - [[A'PA - rho^2 P, A'PB], [B'PA, B'PB]]``.

    The certificate is feasible when the smallest eigenvalue of that 3x3
    residual is at least ``-1e-10``.
    """
    if not (0.0 < rho < 1.0):
        raise InvalidRho(f"rho must lie in (0, 1), got {rho}")
    P = np.asarray(P_tilde, dtype=float)
    if P.shape != (2, 2) or abs(P[0, 1] - P[1, 0]) > 1e-12 * max(1.0, np.abs(P).max()):
        raise NonPSDInput("P_tilde must be a symmetric 2x2 matrix")
    if dense_eigvalsh(P)[-1] < -1e-12 * max(1.0, np.abs(P).max()):
        raise NonPSDInput("P_tilde is not positive semidefinite")
    A, B, X1, X2 = mi_matrices(alpha, beta, mu, L, lambda_n)
    r2 = rho * rho
    top = np.block([[A.T @ P @ A - r2 * P, A.T @ P @ B], [B.T @ P @ A, B.T @ P @ B]])
    M = r2 * X1 + (1.0 - r2) * X2 - top
    M = 0.5 * (M + M.T)
    slack = float(dense_eigvalsh(M)[-1])
    return MICertificate(alpha, beta, rho, P.copy(), slack, M)


def certified_rho(alpha: float, mu: float) -> float:
    """Contraction factor that ``S_alpha`` certifies for the accelerated momentum.

    The matrix inequality is written in ``rho^2``; the D-ASG rate
    ``(1 - sqrt(alpha mu))^k`` on squared distances corresponds to
    ``rho^2 = 1 - sqrt(alpha mu)``.
    """
    return math.sqrt(1.0 - math.sqrt(alpha * mu))


# ---------------------------------------------------------------------------
# D-ASG


def lyapunov_value(P_tilde, c: float, alpha: float, xi, W: MixingMatrix, suite: ObjectiveSuite,
                   x_inf) -> float:
    """``xi^T (P kron I) xi + c [F_{W,alpha}(xi_1 + x_inf) - F_{W,alpha}(x_inf)]``.

    ``xi`` stacks ``x^(k) - x_inf`` and ``x^(k-1) - x_inf``: shape (2, N, d) or a
    flat vector of length 2Nd.
    """
    P = np.asarray(P_tilde, dtype=float)
    N, d = suite.n, suite.dim
    xi = np.asarray(xi, dtype=float).reshape(2, N, d)
    x_inf = np.asarray(x_inf, dtype=float).reshape(N, d)
    quad = sum(P[a, b] * float(np.sum(xi[a] * xi[b])) for a in range(2) for b in range(2))
    if c == 0:
        return float(quad)
    pen = PenalizedObjective(W, alpha, suite)
    return float(quad + c * (pen.value(xi[0] + x_inf) - pen.value(x_inf)))


def v_s_alpha(alpha: float, W: MixingMatrix, suite: ObjectiveSuite, x0, x_inf, x_prev0=None) -> float:
    """``V_{S,alpha}(xi_0)`` for the start ``(x0, x_prev0)`` (default ``x_prev0 = x0``)."""
    x0 = np.asarray(x0, dtype=float).reshape(suite.n, suite.dim)
    xp = x0 if x_prev0 is None else np.asarray(x_prev0, dtype=float).reshape(suite.n, suite.dim)
    x_inf = np.asarray(x_inf, dtype=float).reshape(suite.n, suite.dim)
    xi = np.stack([x0 - x_inf, xp - x_inf])
    return lyapunov_value(s_alpha(alpha, suite.mu), 1.0, alpha, xi, W, suite, x_inf)


def dasg_bound(k, alpha: float, *, mu: float, L: float, lambda_n: float, sigma: float, N: int,
               V0: float, C1: float = 0.0, gamma: float = 0.0, target: str = "fixed") -> BoundReport:
    """Accelerated-momentum D-ASG bound with ``alpha <= lambda_N/L``.

    ``V0`` is ``V_{S,alpha}(xi_0)`` (see :func:`v_s_alpha`).
    """
    if not lambda_n > 0:
        raise Assumption3Violated("bound needs every eigenvalue of W positive")
    if not (0 < alpha <= lambda_n / L * (1 + 1e-12)):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, lambda_N/L] = (0, {lambda_n / L:.6g}]")
    k = np.asarray(k, dtype=float)
    s = math.sqrt(alpha * mu)
    rate = (1.0 - s) ** k
    j_inf = math.sqrt(alpha) / (mu * math.sqrt(mu)) * (2.0 - lambda_n + alpha * L)
    inputs = dict(alpha=alpha, beta=(1 - s) / (1 + s), sigma=sigma, N=N, mu=mu, L=L,
                  lambda_n=lambda_n, C1=C1, gamma=gamma, V0=V0, target=target)
    if target == "fixed":
        return _report("dasg", k, 2.0 * rate * V0 / mu, sigma ** 2 * N * j_inf, 0.0, inputs, j_inf=j_inf)
    if target != "opt":
        raise ParameterOutOfRange(f"unknown target {target!r}")
    if alpha > 1.0 / (L + mu) * (1 + 1e-12):
        raise AlphaOutOfRange("distance-to-optimum bound needs alpha <= 1/(L+mu)")
    net = _network_term(alpha, mu, L, lambda_n, C1, gamma, N)
    return _report("dasg", k, 4.0 * rate * V0 / mu, 2.0 * sigma ** 2 * N * j_inf, net, inputs, j_inf=j_inf)


def dasg_bound_general(k, cert: MICertificate, *, mu: float, L: float, lambda_n: float, sigma: float,
                       N: int, V0: float) -> BoundReport:
    """D-ASG bound from any feasible certificate ``(rho, P)``; ``V0 = V_{P,alpha,1}(xi_0)``."""
    if not cert.feasible:
        raise ParameterOutOfRange("certificate is not feasible")
    a, r2 = cert.alpha, cert.rho ** 2
    k = np.asarray(k, dtype=float)
    inner = cert.P_tilde[0, 0] + (1.0 - lambda_n + a * L) / (2.0 * a)
    j_inf = 2.0 * a ** 2 / (mu * (1.0 - r2)) * inner
    inputs = dict(alpha=a, beta=cert.beta, rho=cert.rho, sigma=sigma, N=N, mu=mu, L=L,
                  lambda_n=lambda_n, V0=V0)
    return _report("dasg", k, r2 ** k * 2.0 * V0 / mu, sigma ** 2 * N * j_inf, 0.0, inputs, j_inf=j_inf)


# ---------------------------------------------------------------------------
# rate / robustness trade-off


def alpha_bar(mu: float, L: float, lambda_n: float) -> float:
    return min(lambda_n / L, 1.0 / (L + mu))


def j_tot(alpha, *, mu, L, lambda_n, sigma, N, C1, gamma):
    """Variance plus network terms of the accelerated distance-to-optimum bound."""
    alpha = np.asarray(alpha, dtype=float)
    var = 2.0 * sigma ** 2 * N * np.sqrt(alpha) * (2.0 - lambda_n + alpha * L) / (mu * math.sqrt(mu))
    if C1 == 0:
        return var
    net = 2.0 * C1 ** 2 * N * alpha ** 2 / (1.0 - gamma) ** 2 if gamma < 1 else np.inf
    return var + net


def tradeoff_G(z, **kw):
    """``G(z) = J_tot(z^2)``."""
    z = np.asarray(z, dtype=float)
    return j_tot(z * z, **kw)


def tradeoff_G_prime(z, *, mu, L, lambda_n, sigma, N, C1, gamma):
    z = np.asarray(z, dtype=float)
    d_var = 2.0 * sigma ** 2 * N * (2.0 - lambda_n + 3.0 * L * z * z) / (mu * math.sqrt(mu))
    d_net = 8.0 * C1 ** 2 * N * z ** 3 / (1.0 - gamma) ** 2 if C1 != 0 else 0.0
    return d_var + d_net


@dataclass(frozen=True)
class Tradeoff:
    alpha_star: float
    j_tot: float
    alpha_bar: float
    rho_star: float
    delta: float

    def to_dict(self):
        return asdict(self)


def tradeoff_alpha(delta: float, mu: float, L: float, lambda_n: float, sigma: float, N: int,
                   C1: float, gamma: float) -> Tradeoff:
    """Smallest-noise stepsize whose certified rate is within ``(1+delta)`` of the fastest.

    ``alpha* = (1 - rho*(1+delta))^2 / mu`` with ``rho* = 1 - sqrt(alpha_bar mu)``.
    """
    if not lambda_n > 0:
        raise Assumption3Violated("trade-off needs every eigenvalue of W positive")
    ab = alpha_bar(mu, L, lambda_n)
    rs = 1.0 - math.sqrt(ab * mu)
    hi = 1.0 / rs - 1.0
    if not (0.0 <= delta <= hi):
        raise DeltaOutOfRange(f"delta must lie in [0, {hi:.6g}]")
    a = (1.0 - rs * (1.0 + delta)) ** 2 / mu
    jt = float(j_tot(a, mu=mu, L=L, lambda_n=lambda_n, sigma=sigma, N=N, C1=C1, gamma=gamma))
    return Tradeoff(alpha_star=a, j_tot=jt, alpha_bar=ab, rho_star=rs, delta=delta)


# ---------------------------------------------------------------------------
# D-MASG


def masg_stage_bound(t, *, k1: int, p: float, mu: float, L: float, lambda_n: float, sigma: float,
                     N: int, dist0_opt2: float, C1: float = 0.0, gamma: float = 0.0) -> BoundReport:
    """Bound on ``E||x^(L_{t+1}) - x*||^2`` at the end of stage ``t+1``."""
    if p < 7:
        raise ParameterOutOfRange("stage-boundary bound needs p >= 7")
    if not lambda_n > 0:
        raise Assumption3Violated("D-MASG needs every eigenvalue of W positive")
    t = np.asarray(t, dtype=float)
    kt = (L / mu + 1.0) / lambda_n
    bias = 4.0 * 2.0 ** (-(p - 2.0) * t) * math.exp(-k1 / math.sqrt(kt)) * dist0_opt2
    var = 12.0 * N * sigma ** 2 / (2.0 ** t * mu ** 2 * math.sqrt(kt))
    if C1 == 0:
        net = 0.0 * t
    elif gamma >= 1:
        net = np.inf + 0.0 * t
    else:
        net = 12.0 * N * 2.0 ** (-4.0 * t) * (C1 * lambda_n / (L * (1.0 - gamma))) ** 2
    inputs = dict(k1=k1, p=p, mu=mu, L=L, lambda_n=lambda_n, sigma=sigma, N=N, C1=C1, gamma=gamma,
                  dist0_opt2=dist0_opt2, kappa_tilde=kt)
    return _report("dmasg", t, bias, var, net, inputs)


def masg_one_stage_bound(k, alpha: float, *, mu: float, L: float, lambda_n: float, sigma: float,
                         N: int, dist0_opt2: float, C1: float = 0.0, gamma: float = 0.0) -> BoundReport:
    """Single accelerated stage started from ``x^(-1) = x^(0)``."""
    if not (0 < alpha <= alpha_bar(mu, L, lambda_n) * (1 + 1e-12)):
        raise AlphaOutOfRange("one-stage bound needs 0 < alpha <= min(lambda_N/L, 1/(L+mu))")
    k = np.asarray(k, dtype=float)
    bias = 4.0 * np.exp(-k * math.sqrt(alpha * mu)) * dist0_opt2
    var = 6.0 * N * math.sqrt(alpha) * sigma ** 2 / (mu * math.sqrt(mu))
    net = 6.0 * N * C1 ** 2 * alpha ** 2 / (1.0 - gamma) ** 2 if C1 else 0.0
    inputs = dict(alpha=alpha, mu=mu, L=L, lambda_n=lambda_n, sigma=sigma, N=N, C1=C1, gamma=gamma,
                  dist0_opt2=dist0_opt2)
    return _report("dmasg", k, bias, var, net, inputs)


def masg_any_k_bound(k, *, k1: int, p: float, mu: float, L: float, lambda_n: float, sigma: float,
                     N: int, dist0_opt2: float, C1: float = 0.0, gamma: float = 0.0) -> BoundReport:
    """Any-iteration bound for ``k > k1``, up to an unstated absolute constant (taken as 1)."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= k1):
        raise ParameterOutOfRange("any-k bound needs k > k1")
    kt = (L / mu + 1.0) / lambda_n
    m = k - k1
    bias = (6.0 * p * math.sqrt(kt) / m) ** (p - 2.0) * math.exp(-k1 / math.sqrt(kt)) * dist0_opt2
    var = N * p * sigma ** 2 / (mu ** 2 * m)
    net = N * p ** 4 * C1 ** 2 / ((1.0 - gamma) ** 2 * mu ** 2 * m ** 4) if C1 else 0.0 * m
    inputs = dict(k1=k1, p=p, mu=mu, L=L, lambda_n=lambda_n, sigma=sigma, N=N, C1=C1, gamma=gamma,
                  dist0_opt2=dist0_opt2, kappa_tilde=kt)
    return _report("dmasg", k, bias, var, net, inputs, flags=["O(1) constant taken as 1"])


def masg_complexity(eps, *, delta0: float, sigma: float, N: int, mu: float, kappa_tilde: float,
                    C1: float, gamma: float) -> np.ndarray:
    """Iterations to an eps-accurate point, up to an unstated absolute constant (taken as 1)."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ParameterOutOfRange("eps must be positive")
    net = (N ** 0.25 * math.sqrt(C1 / (1.0 - gamma)) / (math.sqrt(mu) * eps ** 0.25)) if C1 else 0.0
    return (math.sqrt(kappa_tilde) * np.log(np.maximum(delta0 / eps, 1.0))
            + N * sigma ** 2 / (mu ** 2 * eps) + net)


def hat_alpha_relative(mu: float, L: float, lambda_n: float, eta: float) -> float:
    """Stepsize cap under relative gradient noise."""
    if eta < 0:
        raise ParameterOutOfRange("eta must be nonnegative")
    base = lambda_n / L
    if eta == 0:
        return base
    return min(base, mu ** 3 / (60.0 * eta ** 2) ** 2)
