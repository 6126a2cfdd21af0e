"""Local objectives, suite constants and the global optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NoConvergence, SingularSystem, ValidationError
from .oracles import dense_eigvalsh


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


@dataclass(frozen=True)
class QuadraticLocal:
    """``f(x) = 1/2 x^T Q x - p^T x + r``."""

    Q: np.ndarray
    p: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if Q.shape != (p.size, p.size):
            raise DimensionMismatch(f"Q has shape {Q.shape} but p has length {p.size}")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Q))):
            raise ValidationError("Q must be symmetric")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.p.size

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) - x @ self.p + self.r

    def grad(self, x):
        return np.asarray(x, dtype=float) @ self.Q - self.p

    def minimizer(self) -> np.ndarray:
        return np.linalg.solve(self.Q, self.p)

    def min_value(self) -> float:
        return float(self.r - 0.5 * self.p @ self.minimizer())

    def curvature(self) -> tuple[float, float]:
        ev = dense_eigvalsh(self.Q)
        return float(ev[-1]), float(ev[0])


@dataclass(frozen=True)
class LogisticLocal:
    """``f(x) = mean(log(1 + exp(-y X x))) + lam ||x||^2``."""

    X: np.ndarray
    y: np.ndarray
    lam: float

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] < 1:
            raise ValidationError("logistic local needs at least one sample")
        if X.shape[0] != y.size:
            raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} labels")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValidationError("labels must be +1 or -1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def value(self, x):
        m = self.y * (np.asarray(x, dtype=float) @ self.X.T)
        return np.mean(np.logaddexp(0.0, -m), axis=-1) + self.lam * np.sum(x * x, axis=-1)

    def grad(self, x, rows=None):
        """Gradient; with ``rows`` the data term is restricted to those samples."""
        x = np.asarray(x, dtype=float)
        X, y = (self.X, self.y) if rows is None else (self.X[rows], self.y[rows])
        m = y * (x @ X.T)
        w = -y * _sigmoid(-m) / y.size
        return w @ X + 2.0 * self.lam * x

    def curvature(self) -> tuple[float, float]:
        top = dense_eigvalsh(self.X.T @ self.X)[0] / (4.0 * self.n)
        return 2.0 * self.lam, 2.0 * self.lam + float(max(top, 0.0))


@dataclass(frozen=True)
class ObjectiveSuite:
    """N homogeneous local objectives with their global constants."""

    locals: tuple
    kind: str
    dim: int
    mu: float
    lipschitz: float
    x_star: np.ndarray
    f_i_star: np.ndarray
    grad_at_xstar_norm: float
    Q: np.ndarray | None = field(default=None, repr=False)
    P: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.locals)

    @property
    def kappa(self) -> float:
        return self.lipschitz / self.mu

    @classmethod
    def build(cls, locals_: Sequence, mu: float | None = None, lipschitz: float | None = None
              ) -> "ObjectiveSuite":
        """Validate the locals, derive (mu, L), and solve for x* and each f_i*.

        ``mu``/``lipschitz`` override the derived constants (a smaller mu or a
        larger L is always valid).
        """
        locals_ = tuple(locals_)
        if not locals_:
            raise ValidationError("suite needs at least one local objective")
        if all(isinstance(f, QuadraticLocal) for f in locals_):
            kind = "quadratic"
        elif all(isinstance(f, LogisticLocal) for f in locals_):
            kind = "logistic"
        else:
            raise ValidationError("local objectives must all be of one kind")
        d = locals_[0].dim
        if any(f.dim != d for f in locals_):
            raise DimensionMismatch("local objectives have different dimensions")
        curv = np.array([f.curvature() for f in locals_])
        mu_d, L_d = float(curv[:, 0].min()), float(curv[:, 1].max())
        mu_v = mu_d if mu is None else float(mu)
        L_v = L_d if lipschitz is None else float(lipschitz)
        if not (0 < mu_v <= L_v):
            raise ValidationError(f"need 0 < mu <= L, got mu={mu_v}, L={L_v}")
        Q = P = None
        if kind == "quadratic":
            Q = np.stack([f.Q for f in locals_])
            P = np.stack([f.p for f in locals_])
            H = Q.sum(axis=0)
            if dense_eigvalsh(H)[-1] <= 0:
                raise SingularSystem("sum of Q_i is not positive definite")
            x_star = np.linalg.solve(H, P.sum(axis=0))
            f_star = np.array([f.min_value() for f in locals_])
        else:
            x_star = _gd_minimize(lambda x: np.mean([f.grad(x) for f in locals_], axis=0), d, L_v)
            f_star = np.array([f.value(_gd_minimize(f.grad, d, L_v)) for f in locals_])
        for a in (x_star, f_star, Q, P):
            if a is not None:
                a.setflags(write=False)
        suite = cls(locals=locals_, kind=kind, dim=d, mu=mu_v, lipschitz=L_v, x_star=x_star,
                    f_i_star=f_star, grad_at_xstar_norm=0.0, Q=Q, P=P)
        g = suite.stacked_grad(np.tile(x_star, suite.n))
        object.__setattr__(suite, "grad_at_xstar_norm", float(np.linalg.norm(g)))
        return suite

    def values(self, x) -> np.ndarray:
        """Per-node values f_i(x_i) for ``x`` of shape (..., N, d)."""
        x = np.asarray(x, dtype=float)
        return np.stack([f.value(x[..., i, :]) for i, f in enumerate(self.locals)], axis=-1)

    def F(self, x) -> np.ndarray:
        """``F(x) = sum_i f_i(x_i)`` for ``x`` of shape (..., N, d)."""
        return self.values(x).sum(axis=-1)

    def grad(self, x) -> np.ndarray:
        """Per-node gradients for ``x`` of shape (..., N, d)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-2:] != (self.n, self.dim):
            raise DimensionMismatch(f"expected trailing shape {(self.n, self.dim)}, got {x.shape}")
        if self.kind == "quadratic":
            return np.einsum("nij,...nj->...ni", self.Q, x) - self.P
        out = np.empty_like(x)
        for i, f in enumerate(self.locals):
            out[..., i, :] = f.grad(x[..., i, :])
        return out

    def hessian_stack(self) -> np.ndarray:
        """Block-diagonal Nd x Nd Hessian of F (quadratic suites only)."""
        if self.kind != "quadratic":
            raise ValidationError("Hessian stack is defined for quadratic suites only")
        n, d = self.n, self.dim
        H = np.zeros((n * d, n * d))
        for i in range(n):
            H[i * d:(i + 1) * d, i * d:(i + 1) * d] = self.Q[i]
        return H

    def stacked_grad(self, x_stacked) -> np.ndarray:
        x = np.asarray(x_stacked, dtype=float)
        if x.shape != (self.n * self.dim,):
            raise DimensionMismatch(f"expected length {self.n * self.dim}, got {x.shape}")
        return self.grad(x.reshape(self.n, self.dim)).reshape(-1)

    def global_grad(self, x) -> np.ndarray:
        """Gradient of ``f = (1/N) sum_i f_i`` at a single point."""
        return self.grad(np.broadcast_to(x, (self.n, self.dim))).mean(axis=0)


def _gd_minimize(grad, d, L, tol=1e-10, max_iter=10_000_000) -> np.ndarray:
    x = np.zeros(d)
    for _ in range(max_iter):
        g = grad(x)
        if np.linalg.norm(g) <= tol:
            return x
        x = x - g / L
    raise NoConvergence("gradient descent did not reach the residual tolerance")


def grad_local(suite: ObjectiveSuite, i: int, x) -> np.ndarray:
    """Exact gradient of f_i at a d-vector."""
    if not 0 <= i < suite.n:
        raise ValidationError(f"node index {i} out of range")
    x = np.asarray(x, dtype=float)
    if x.shape != (suite.dim,):
        raise DimensionMismatch(f"expected a {suite.dim}-vector, got shape {x.shape}")
    return suite.locals[i].grad(x)


def stacked_grad(suite: ObjectiveSuite, x_stacked) -> np.ndarray:
    return suite.stacked_grad(x_stacked)


def global_minimizer(suite: ObjectiveSuite) -> np.ndarray:
    return suite.x_star


def suite_constants(suite: ObjectiveSuite) -> tuple[float, float]:
    return suite.mu, suite.lipschitz


def c1_constant(suite: ObjectiveSuite) -> float:
    """``sqrt(2 L sum_i (f_i(0) - f_i*)) * (1 + 2 (L + mu)/mu)``."""
    mu, L = suite.mu, suite.lipschitz
    f0 = suite.values(np.zeros((suite.n, suite.dim)))
    gap = float(np.sum(np.maximum(f0 - suite.f_i_star, 0.0)))
    return float(np.sqrt(2.0 * L * gap) * (1.0 + 2.0 * (L + mu) / mu))


def random_quadratic_suite(n: int, d: int, mu: float = 1.0, L: float = 4.0, seed: int = 0,
                           shared_basis: bool = False, p_scale: float = 1.0) -> ObjectiveSuite:
    """Random quadratic suite whose Hessian spectra lie in ``[mu, L]``.

    Node 0's Hessian attains ``mu`` and node ``n-1``'s attains ``L`` (they
    coincide when ``n == 1``). With ``shared_basis`` every Q_i is diagonal in
    one common orthonormal basis and has ``mu`` and ``L`` on the same two
    basis vectors; the spectral radius of ``W - alpha Q`` then equals the
    two-point maximum over ``1 - alpha mu`` and ``lambda_N - alpha L``
    (requires ``d >= 2`` unless ``mu == L``).
    """
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((d, d)))[0]
    locs = []
    for i in range(n):
        lam = rng.uniform(mu, L, size=d)
        if not shared_basis:
            U = np.linalg.qr(rng.standard_normal((d, d)))[0]
        if shared_basis:
            lam[0] = mu
            if d > 1:
                lam[-1] = L
        else:
            if i == 0:
                lam[0] = mu
            if i == n - 1 and (d > 1 or n > 1):
                lam[-1] = L
        Q = (U * lam) @ U.T
        locs.append(QuadraticLocal(0.5 * (Q + Q.T), p_scale * rng.standard_normal(d), 0.0))
    return ObjectiveSuite.build(locs, mu=mu, lipschitz=L)


def synthetic_logistic_suite(n_nodes: int = 10, n_samples: int = 1000, d: int = 100,
                             sigma_x2: float = 5.0, lam: float = 0.05, seed: int = 0,
                             mu: float | None = None) -> ObjectiveSuite:
    """Planted-model logistic regression split evenly over ``n_nodes``.

    ``x0 ~ N(0, I)``, rows ``X ~ N(0, sigma_x2 I)``, labels ``sign(X x0)``;
    ``n_samples`` is the total, node i receives a contiguous share.
    """
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(d)
    X = rng.normal(0.0, np.sqrt(sigma_x2), size=(n_samples, d))
    y = np.sign(X @ x0)
    y[y == 0] = 1.0
    parts = np.array_split(np.arange(n_samples), n_nodes)
    locs = [LogisticLocal(X[idx], y[idx], lam) for idx in parts]
    return ObjectiveSuite.build(locs, mu=mu)
