"""Stochastic gradient oracles.

Every random draw is a pure function of ``(seed, replicate, node, iteration)``
through the counter-based streams in :mod:`dsgkit.kernels`, so results do not
depend on how replicates are batched or scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import kernels
from .errors import MinibatchOnQuadratic, ParameterOutOfRange
from .objectives import ObjectiveSuite

KINDS = ("exact", "gaussian_iso", "relative", "minibatch")

TAG_GAUSSIAN = 0x6761
TAG_MINIBATCH = 0x6D62


@dataclass(frozen=True)
class NoiseSpec:
    """Gradient noise model.

    ``gaussian_iso`` adds ``N(0, (sigma^2/d) I)`` per node; ``relative`` adds
    isotropic Gaussian noise whose total variance is
    ``sigma^2 + (eta^2/2) ||x_i - x*||^2``; ``minibatch`` replaces the data
    term of a logistic local by its average over ``ceil(b n_i)`` rows drawn
    without replacement (the regularizer is kept exact).
    """

    kind: str = "exact"
    sigma: float = 0.0
    eta: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterOutOfRange(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0 or self.eta < 0:
            raise ParameterOutOfRange("sigma and eta must be nonnegative")
        if self.kind == "minibatch" and not (0.0 < self.b <= 1.0):
            raise ParameterOutOfRange(f"batch proportion must lie in (0, 1], got {self.b}")

    @classmethod
    def exact(cls) -> "NoiseSpec":
        return cls("exact")

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseSpec":
        return cls("gaussian_iso", sigma=float(sigma))

    @classmethod
    def relative(cls, sigma: float, eta: float) -> "NoiseSpec":
        return cls("relative", sigma=float(sigma), eta=float(eta))

    @classmethod
    def minibatch(cls, b: float) -> "NoiseSpec":
        return cls("minibatch", b=float(b))

    @classmethod
    def from_spec(cls, spec: dict[str, Any] | None) -> "NoiseSpec":
        if not spec:
            return cls.exact()
        kw = {k: float(spec[k]) for k in ("sigma", "eta", "b") if k in spec}
        return cls(spec.get("kind", "exact"), **kw)

    @property
    def is_exact(self) -> bool:
        if self.kind == "exact":
            return True
        if self.kind == "gaussian_iso":
            return self.sigma == 0.0
        if self.kind == "relative":
            return self.sigma == 0.0 and self.eta == 0.0
        return self.b == 1.0

    def check_suite(self, suite: ObjectiveSuite) -> None:
        if self.kind == "minibatch" and suite.kind != "logistic":
            raise MinibatchOnQuadratic("minibatch noise needs a logistic (finite-sum) suite")


class NoiseStream:
    """Binds a :class:`NoiseSpec` to a master seed and a set of replicate ids."""

    def __init__(self, spec: NoiseSpec, seed: int = 0, replicates=None):
        self.spec = spec
        self.seed = int(seed)
        self.replicates = np.arange(1) if replicates is None else np.asarray(replicates, dtype=np.int64)
        self.key_gauss = kernels.stream_key(self.seed, TAG_GAUSSIAN)
        self.key_batch = kernels.stream_key(self.seed, TAG_MINIBATCH)

    def gradients(self, suite: ObjectiveSuite, x: np.ndarray, k: int) -> np.ndarray:
        """Noisy gradients at ``x`` of shape (R, N, d) or (N, d) for iteration ``k``."""
        spec = self.spec
        x = np.asarray(x, dtype=float)
        single = x.ndim == 2
        xb = x[None] if single else x
        R = xb.shape[0]
        if R != self.replicates.size:
            raise ValueError(f"state has {R} replicates but the stream has {self.replicates.size}")
        N, d = suite.n, suite.dim
        if spec.kind == "minibatch" and spec.b < 1.0:
            spec.check_suite(suite)
            g = self._minibatch(suite, xb, k)
        else:
            if spec.kind == "minibatch":
                spec.check_suite(suite)
            g = suite.grad(xb)
            if spec.kind == "gaussian_iso" and spec.sigma > 0:
                g = g + (spec.sigma / math.sqrt(d)) * kernels.gaussian_block(
                    self.key_gauss, self.replicates, k, N, d)
            elif spec.kind == "relative" and (spec.sigma > 0 or spec.eta > 0):
                dev2 = np.sum((xb - suite.x_star) ** 2, axis=-1, keepdims=True)
                scale = np.sqrt((spec.sigma ** 2 + 0.5 * spec.eta ** 2 * dev2) / d)
                g = g + scale * kernels.gaussian_block(self.key_gauss, self.replicates, k, N, d)
        return g[0] if single else g

    def batch_rows(self, suite: ObjectiveSuite, k: int) -> list[np.ndarray]:
        """Row indices (R, m_i) sampled at each node for iteration ``k``."""
        sizes = [f.n for f in suite.locals]
        keys = kernels.uniform_block(self.key_batch, self.replicates, k, suite.n, max(sizes))
        rows = []
        for i, n_i in enumerate(sizes):
            m = min(n_i, math.ceil(self.spec.b * n_i))
            u = keys[:, i, :n_i]
            if m < n_i:
                idx = np.argpartition(u, m - 1, axis=1)[:, :m]
            else:
                idx = np.broadcast_to(np.arange(n_i), (u.shape[0], n_i))
            rows.append(np.sort(idx, axis=1))
        return rows

    def _minibatch(self, suite, xb, k):
        rows = self.batch_rows(suite, k)
        out = np.empty_like(xb)
        for i, f in enumerate(suite.locals):
            idx = rows[i]
            Xs = f.X[idx]                      # (R, m, d)
            ys = f.y[idx]                      # (R, m)
            xi = xb[:, i, :]
            m = ys * np.einsum("rmd,rd->rm", Xs, xi)
            w = -ys * 0.5 * (1.0 + np.tanh(-0.5 * m)) / ys.shape[1]
            out[:, i, :] = np.einsum("rm,rmd->rd", w, Xs) + 2.0 * f.lam * xi
        return out


def sample_gradient(spec: NoiseSpec, suite: ObjectiveSuite, i: int, x, seed: int = 0,
                    replicate: int = 0, iteration: int = 0) -> np.ndarray:
    """One noisy gradient of f_i at a d-vector, from stream (seed, replicate, i, iteration)."""
    spec.check_suite(suite)
    x = np.asarray(x, dtype=float)
    full = np.broadcast_to(x, (suite.n, suite.dim)).copy()
    stream = NoiseStream(spec, seed, [replicate])
    return stream.gradients(suite, full[None], iteration)[0, i]


def sample_gradients(spec: NoiseSpec, suite: ObjectiveSuite, x, seed: int = 0, replicates=None,
                     iteration: int = 0) -> np.ndarray:
    """Noisy stacked gradients for a batch of replicate states (R, N, d)."""
    spec.check_suite(suite)
    return NoiseStream(spec, seed, replicates).gradients(suite, x, iteration)


def estimate_sigma2(spec: NoiseSpec, suite: ObjectiveSuite, x=None, samples: int = 1000,
                    seed: int = 12345) -> float:
    """Plug-in estimate of the per-node gradient-noise variance bound.

    Draws ``samples`` noisy gradients at ``x`` (default: every node at x*) and
    returns the largest per-node trace covariance.
    """
    spec.check_suite(suite)
    if spec.is_exact:
        return 0.0
    if spec.kind == "gaussian_iso":
        return spec.sigma ** 2
    x = suite.x_star if x is None else np.asarray(x, dtype=float)
    xs = np.broadcast_to(x, (suite.n, suite.dim))
    reps = np.arange(samples)
    g = NoiseStream(spec, seed, reps).gradients(suite, np.broadcast_to(xs, (samples,) + xs.shape), 0)
    var = np.sum(np.var(g, axis=0, ddof=1), axis=-1)
    return float(np.max(var))
