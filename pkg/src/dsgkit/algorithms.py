"""D-SG, D-ASG and D-MASG iterations, schedules and replicate-averaged traces."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import Assumption3Violated, DimensionMismatch, ParameterOutOfRange, ValidationError
from .netgraph import MixingMatrix, assert_assumption3
from .noise import NoiseSpec, NoiseStream
from .objectives import ObjectiveSuite

METRICS = ("dist2_opt", "dist2_fixed", "avg_dist2_opt", "consensus_err")
CHUNK = 2048


def accel_beta(alpha: float, mu: float) -> float:
    """Momentum ``(1 - sqrt(alpha mu)) / (1 + sqrt(alpha mu))``."""
    s = math.sqrt(alpha * mu)
    return (1.0 - s) / (1.0 + s)


@dataclass(frozen=True)
class RunConfig:
    """Constant-parameter run of D-SG or D-ASG.

    ``beta=None`` means the accelerated default for ``dasg`` and 0 for ``dsg``.
    """

    method: str = "dsg"
    alpha: float = 0.01
    beta: float | None = None
    iters: int = 1000
    replicates: int = 1
    record_every: int = 1
    seed: int = 0
    per_node: bool = False

    def __post_init__(self):
        if self.method not in ("dsg", "dasg"):
            raise ValidationError(f"unknown method {self.method!r}")
        if not self.alpha > 0:
            raise ParameterOutOfRange("alpha must be positive")
        if self.beta is not None and self.beta < 0:
            raise ParameterOutOfRange("beta must be nonnegative")
        if self.method == "dsg" and self.beta not in (None, 0, 0.0):
            raise ParameterOutOfRange("dsg has no momentum; leave beta unset")
        if self.iters < 0 or self.replicates < 1 or self.record_every < 1:
            raise ParameterOutOfRange("iters >= 0, replicates >= 1 and record_every >= 1 required")

    def resolved_beta(self, mu: float) -> float:
        if self.method == "dsg":
            return 0.0
        return accel_beta(self.alpha, mu) if self.beta is None else float(self.beta)


@dataclass(frozen=True)
class Stage:
    k: int
    alpha: float
    beta: float


@dataclass(frozen=True)
class MasgSchedule:
    """Stage list ``(k_t, alpha_t, beta_t)`` joined by momentum restarts."""

    stages: tuple[Stage, ...]
    kappa_tilde: float = float("nan")
    p: float = float("nan")

    @property
    def total(self) -> int:
        return sum(s.k for s in self.stages)

    @property
    def boundaries(self) -> np.ndarray:
        """``L_t`` for t = 0..T (cumulative stage lengths, starting at 0)."""
        return np.concatenate([[0], np.cumsum([s.k for s in self.stages])]).astype(int)

    def per_iteration(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        alphas = np.concatenate([np.full(s.k, s.alpha) for s in self.stages])
        betas = np.concatenate([np.full(s.k, s.beta) for s in self.stages])
        restarts = np.zeros(alphas.size, dtype=np.uint8)
        restarts[self.boundaries[:-1]] = 1
        return alphas, betas, restarts


def kappa_tilde(mu: float, L: float, lambda_n: float) -> float:
    """Scaled condition number ``(L/mu + 1) / lambda_N``."""
    return (L / mu + 1.0) / lambda_n


def masg_k1_default(p: float, kt: float) -> int:
    """First-stage length ``ceil((p-2) log(6 p kt) sqrt(kt))``."""
    return int(math.ceil((p - 2.0) * math.log(6.0 * p * kt) * math.sqrt(kt)))


def masg_k1_target(kt: float, delta: float, eps: float) -> int:
    """First-stage length ``ceil(sqrt(kt) log(delta/eps))`` for an eps target."""
    return max(1, int(math.ceil(math.sqrt(kt) * math.log(delta / eps))))


def build_masg_schedule(k1: int, p: float, suite: ObjectiveSuite, W: MixingMatrix,
                        num_stages: int) -> MasgSchedule:
    """Geometric D-MASG schedule.

    ``alpha_1 = lambda_N/(L+mu)``; for ``t >= 2``,
    ``k_t = 2^t ceil(p sqrt(kt) ln 2)`` and ``alpha_t = lambda_N/(4^t (L+mu))``.
    """
    lam = W.lambda_min
    if not assert_assumption3(W):
        raise Assumption3Violated(
            f"lambda_N = {lam:.4g} <= 0; use shift_mixing(W, tau) to make every eigenvalue positive")
    if k1 < 1 or num_stages < 1:
        raise ParameterOutOfRange("k1 and num_stages must be at least 1")
    if p < 7:
        warnings.warn(f"p = {p} < 7: the stage-boundary guarantee assumes p >= 7", stacklevel=2)
    mu, L = suite.mu, suite.lipschitz
    kt = kappa_tilde(mu, L, lam)
    base = int(math.ceil(p * math.sqrt(kt) * math.log(2.0)))
    stages = []
    for t in range(1, num_stages + 1):
        if t == 1:
            k, a = int(k1), lam / (L + mu)
        else:
            k, a = (2 ** t) * base, lam / ((2 ** (2 * t)) * (L + mu))
        stages.append(Stage(k, a, accel_beta(a, mu)))
    return MasgSchedule(tuple(stages), kappa_tilde=kt, p=float(p))


@dataclass
class RunState:
    """Iterates ``x^(k)`` and ``x^(k-1)``, shaped (N, d) or (R, N, d)."""

    x_curr: np.ndarray
    x_prev: np.ndarray
    k: int = 0

    @classmethod
    def start(cls, x0, x_prev=None) -> "RunState":
        x0 = np.array(x0, dtype=float)
        xp = x0.copy() if x_prev is None else np.array(x_prev, dtype=float)
        if xp.shape != x0.shape:
            raise DimensionMismatch("x0 and x_prev shapes differ")
        return cls(x0, xp, 0)


def _check_state(state: RunState, W: MixingMatrix, suite: ObjectiveSuite):
    if state.x_curr.shape[-2:] != (suite.n, suite.dim) or W.n != suite.n:
        raise DimensionMismatch(
            f"state {state.x_curr.shape}, W {W.W.shape}, suite N={suite.n}, d={suite.dim} disagree")


def _noisy_grad(noise, suite, y, k):
    if noise is None:
        return suite.grad(y)
    if isinstance(noise, NoiseSpec):
        if not noise.is_exact:
            raise ValidationError("pass a NoiseStream for stochastic gradients")
        return suite.grad(y)
    return noise.gradients(suite, y, k)


def _gossip_step(y, W, suite, noise, alpha, k):
    g = _noisy_grad(noise, suite, y, k)
    return np.matmul(W.W, y) - alpha * g


def dsg_step(state: RunState, W: MixingMatrix, suite: ObjectiveSuite, noise, alpha: float) -> RunState:
    """``x+ = W x - alpha grad~F(x)``, applied node-wise."""
    _check_state(state, W, suite)
    x = state.x_curr
    return RunState(_gossip_step(x, W, suite, noise, alpha, state.k), x, state.k + 1)


def dasg_step(state: RunState, W: MixingMatrix, suite: ObjectiveSuite, noise, alpha: float,
              beta: float) -> RunState:
    """``y = (1+beta) x - beta x_prev``; ``x+ = W y - alpha grad~F(y)``."""
    _check_state(state, W, suite)
    x = state.x_curr
    y = x if beta == 0.0 else (1.0 + beta) * x - beta * state.x_prev
    return RunState(_gossip_step(y, W, suite, noise, alpha, state.k), x, state.k + 1)


@dataclass
class Trace:
    """Replicate-averaged metrics at the recorded iterations.

    ``se_*`` are standard errors of the replicate means. ``tail`` (when a tail
    window was requested) holds per-replicate time averages over the window:
    the four metrics followed by ``(xbar_j - xbar_ref_j)^2`` for each
    coordinate j, where ``xbar_ref`` is the node average of x^inf (or x*).
    """

    k: np.ndarray
    dist2_opt: np.ndarray
    dist2_fixed: np.ndarray
    avg_dist2_opt: np.ndarray
    consensus_err: np.ndarray
    se: dict[str, np.ndarray]
    method: str
    alpha: np.ndarray
    beta: np.ndarray
    replicates: int
    tail: np.ndarray | None = None
    tail_start: int | None = None
    per_node: np.ndarray | None = None
    final: np.ndarray | None = field(default=None, repr=False)

    def metric(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def tail_mean(self, name: str) -> tuple[float, float]:
        """Mean and standard error over replicates of a tail-averaged metric."""
        if self.tail is None:
            raise ValueError("trace was recorded without a tail window")
        col = self.tail[:, METRICS.index(name)]
        se = col.std(ddof=1) / math.sqrt(col.size) if col.size > 1 else 0.0
        return float(col.mean()), float(se)

    def tail_coord_var(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate stationary second moment of the node average, with standard errors."""
        cols = self.tail[:, len(METRICS):]
        se = cols.std(axis=0, ddof=1) / math.sqrt(cols.shape[0]) if cols.shape[0] > 1 else 0 * cols[0]
        return cols.mean(axis=0), se


def _metrics(x, x_star, x_inf):
    xbar = x.mean(axis=-2)
    m = np.empty(x.shape[:-2] + (4,))
    m[..., 0] = np.sum((x - x_star) ** 2, axis=(-2, -1))
    m[..., 1] = np.sum((x - x_inf) ** 2, axis=(-2, -1)) if x_inf is not None else np.nan
    m[..., 2] = np.sum((xbar - x_star) ** 2, axis=-1)
    m[..., 3] = np.sum((x - xbar[..., None, :]) ** 2, axis=(-2, -1))
    return m, xbar


def _record_steps(K: int, every: int, extra: Sequence[int] = ()) -> np.ndarray:
    steps = set(range(0, K + 1, every)) | {K} | {int(s) for s in extra if 0 <= s <= K}
    return np.array(sorted(steps), dtype=np.int64)


def _generic_chunk(W, suite, noise_spec, seed, reps, x0, xp0, alphas, betas, restarts, rec,
                   x_inf, tail_start, per_node):
    R, N, d = reps.size, suite.n, suite.dim
    K = alphas.size
    stream = NoiseStream(noise_spec, seed, reps)
    state = RunState(np.broadcast_to(x0, (R, N, d)).copy(), np.broadcast_to(xp0, (R, N, d)).copy(), 0)
    xs = suite.x_star
    ref = x_inf.mean(axis=0) if x_inf is not None else xs
    sums = np.zeros((rec.size, 4))
    sumsq = np.zeros((rec.size, 4))
    pn = np.zeros((rec.size, N)) if per_node else None
    tail = np.zeros((R, 4 + d))
    n_tail = 0
    ri = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K + 1):
            want_rec = ri < rec.size and rec[ri] == k
            want_tail = tail_start is not None and k >= tail_start
            if want_rec or want_tail:
                m, xbar = _metrics(state.x_curr, xs, x_inf)
                if want_rec:
                    sums[ri] = m.sum(axis=0)
                    sumsq[ri] = (m * m).sum(axis=0)
                    if per_node:
                        pn[ri] = np.sum((state.x_curr - xs) ** 2, axis=-1).sum(axis=0)
                    ri += 1
                if want_tail:
                    tail[:, :4] += m
                    tail[:, 4:] += (xbar - ref) ** 2
                    n_tail += 1
            if k == K:
                break
            if restarts[k]:
                state = RunState(state.x_curr, state.x_curr.copy(), state.k)
            state = dasg_step(state, W, suite, stream, alphas[k], betas[k])
    if n_tail:
        tail /= n_tail
    return {"sum": sums, "sumsq": sumsq, "tail": tail, "x": state.x_curr, "per_node": pn}


def simulate(W: MixingMatrix, suite: ObjectiveSuite, noise: NoiseSpec, alphas, betas, restarts=None,
             *, replicates: int = 1, seed: int = 0, x0=None, x_prev0=None, record_every: int = 1,
             record_extra: Sequence[int] = (), x_inf=None, tail_start: int | None = None,
             per_node: bool = False, method: str = "dasg", force_generic: bool = False) -> Trace:
    """Core replicate loop over per-iteration ``alphas``/``betas``/``restarts``.

    Quadratic suites with exact or isotropic Gaussian noise go through the
    compiled kernel; everything else through :func:`dasg_step`. Both consume
    the same noise streams, so the two paths agree up to rounding.
    """
    noise.check_suite(suite)
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    K = alphas.size
    restarts = np.zeros(K, dtype=np.uint8) if restarts is None else np.asarray(restarts, dtype=np.uint8)
    N, d = suite.n, suite.dim
    x0 = np.zeros((N, d)) if x0 is None else np.asarray(x0, dtype=float).reshape(N, d)
    xp0 = x0.copy() if x_prev0 is None else np.asarray(x_prev0, dtype=float).reshape(N, d)
    x_inf = None if x_inf is None else np.asarray(x_inf, dtype=float).reshape(N, d)
    rec = _record_steps(K, record_every, record_extra)
    fast = (not force_generic and not per_node and suite.kind == "quadratic"
            and (noise.is_exact or noise.kind == "gaussian_iso"))
    sigma = 0.0 if noise.is_exact else noise.sigma
    key = NoiseStream(noise, seed).key_gauss
    sums = np.zeros((rec.size, 4))
    sumsq = np.zeros((rec.size, 4))
    tails, finals = [], []
    pn = np.zeros((rec.size, N)) if per_node else None
    for start in range(0, replicates, CHUNK):
        reps = np.arange(start, min(replicates, start + CHUNK), dtype=np.int64)
        if fast:
            out = kernels.simulate_quadratic(W.W, suite.Q, suite.P, x0, xp0, alphas, betas, restarts,
                                             sigma, key, reps, rec, suite.x_star, x_inf,
                                             -1 if tail_start is None else int(tail_start))
        else:
            out = _generic_chunk(W, suite, noise, seed, reps, x0, xp0, alphas, betas, restarts, rec,
                                 x_inf, tail_start, per_node)
            if per_node:
                pn += out["per_node"]
        sums += out["sum"]
        sumsq += out["sumsq"]
        tails.append(out["tail"])
        finals.append(out["x"])
    R = replicates
    mean = sums / R
    if R > 1:
        with np.errstate(invalid="ignore", over="ignore"):
            var = np.maximum(sumsq / R - mean * mean, 0.0) * R / (R - 1)
            se = np.sqrt(var / R)
    else:
        se = np.zeros_like(mean)
    rec_alpha = np.array([alphas[min(k, K - 1)] if K else np.nan for k in rec])
    rec_beta = np.array([betas[min(k, K - 1)] if K else np.nan for k in rec])
    return Trace(
        k=rec, dist2_opt=mean[:, 0], dist2_fixed=mean[:, 1], avg_dist2_opt=mean[:, 2],
        consensus_err=mean[:, 3], se={name: se[:, j] for j, name in enumerate(METRICS)},
        method=method, alpha=rec_alpha, beta=rec_beta, replicates=R,
        tail=np.concatenate(tails) if tail_start is not None else None, tail_start=tail_start,
        per_node=None if pn is None else pn / R, final=np.concatenate(finals))


def run(config: RunConfig, W: MixingMatrix, suite: ObjectiveSuite, noise: NoiseSpec, x0=None, *,
        x_prev0=None, x_inf=None, tail_start: int | None = None, record_extra: Sequence[int] = (),
        force_generic: bool = False) -> Trace:
    """Replicate-averaged constant-parameter run; deterministic given ``config.seed``."""
    beta = config.resolved_beta(suite.mu)
    hi = (1.0 + W.lambda_min) / suite.lipschitz
    if config.alpha >= hi:
        warnings.warn(f"alpha = {config.alpha:.4g} >= (1+lambda_N)/L = {hi:.4g}; iterates may diverge",
                      stacklevel=2)
    K = config.iters
    return simulate(W, suite, noise, np.full(K, config.alpha), np.full(K, beta), None,
                    replicates=config.replicates, seed=config.seed, x0=x0, x_prev0=x_prev0,
                    record_every=config.record_every, record_extra=record_extra, x_inf=x_inf,
                    tail_start=tail_start, per_node=config.per_node, method=config.method,
                    force_generic=force_generic)


def masg_run(schedule: MasgSchedule, W: MixingMatrix, suite: ObjectiveSuite, noise: NoiseSpec, x0=None,
             *, replicates: int = 1, seed: int = 0, record_every: int = 1,
             force_generic: bool = False) -> Trace:
    """D-MASG: D-ASG stages with momentum restarts; stage ends are always recorded.

    The distance to x^inf is left as NaN because the fixed point moves with
    the stage stepsize.
    """
    alphas, betas, restarts = schedule.per_iteration()
    return simulate(W, suite, noise, alphas, betas, restarts, replicates=replicates, seed=seed, x0=x0,
                    record_every=record_every, record_extra=schedule.boundaries, x_inf=None,
                    method="dmasg", force_generic=force_generic)


def iterate(W: MixingMatrix, suite: ObjectiveSuite, noise, alphas, betas, restarts=None, x0=None,
            x_prev0=None, seed: int = 0) -> Iterator[RunState]:
    """Yield the single-replicate state before every step and after the last one."""
    alphas = np.asarray(alphas, dtype=float)
    K = alphas.size
    restarts = np.zeros(K, dtype=np.uint8) if restarts is None else np.asarray(restarts)
    x0 = np.zeros((suite.n, suite.dim)) if x0 is None else np.asarray(x0, dtype=float)
    state = RunState.start(x0, x_prev0)
    stream = noise if isinstance(noise, NoiseStream) or noise is None else NoiseStream(noise, seed)
    for k in range(K):
        if restarts[k]:
            state = RunState(state.x_curr, state.x_curr.copy(), state.k)
        yield state
        state = dasg_step(state, W, suite, stream, alphas[k], betas[k])
    yield state
