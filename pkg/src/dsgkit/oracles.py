"""Brute-force verifiers: Lyapunov iteration, eigen/power methods, Monte Carlo, finite differences.

Nothing here uses the closed forms of :mod:`dsgkit.analysis` or
:mod:`dsgkit.quadratic_exact`; these routines exist so those closed forms can
be checked against something computed a different way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .errors import NoConvergence, UnstableA


def dense_eigvalsh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix (cyclic Jacobi), sorted descending."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    sym = 0.5 * (a + a.T)
    return kernels.jacobi_eigvalsh(sym, tol, max_sweeps)[0]


@dataclass(frozen=True)
class LyapunovResult:
    """Fixed point of ``Sigma = A Sigma A^T + Sigma_w``."""

    Sigma: np.ndarray
    trace: float
    iterations: int
    residual: float


def lyapunov_iterate(A, Sigma_w, tol: float = 1e-12, max_iter: int = 1_000_000,
                     rho: float | None = None) -> LyapunovResult:
    """Solve the discrete Lyapunov equation by plain fixed-point iteration.

    Starting from ``Sigma_0 = 0`` the iterates are partial sums of
    ``sum_j A^j Sigma_w (A^j)^T``. Iteration stops when the increment is below
    ``tol * (1 - rho^2) * max(1, ||Sigma||_F)``, which bounds the neglected
    tail of the series by ``tol`` relative to the solution.

    Parameters
    ----------
    A : (n, n) array
    Sigma_w : (n, n) symmetric PSD array
    tol : float
    max_iter : int
    rho : float, optional
        Spectral radius of ``A`` if already known; computed by power
        iteration otherwise.
    """
    A = np.asarray(A, dtype=float)
    Sw = np.asarray(Sigma_w, dtype=float)
    if rho is None:
        rho = power_spectral_radius(A)
    if not rho < 1.0:
        raise UnstableA(f"spectral radius {rho:.6g} >= 1; Lyapunov series diverges")
    scale = max(1.0 - rho * rho, 1e-16)
    S = Sw.copy()
    it = 1
    while True:
        nxt = A @ S @ A.T + Sw
        inc = float(np.linalg.norm(nxt - S))
        S = nxt
        it += 1
        if inc <= tol * scale * max(1.0, float(np.linalg.norm(S))):
            break
        if it >= max_iter:
            raise NoConvergence(f"Lyapunov iteration stalled after {it} steps (increment {inc:.3e})")
    S = 0.5 * (S + S.T)
    resid = float(np.linalg.norm(A @ S @ A.T + Sw - S))
    return LyapunovResult(Sigma=S, trace=float(np.trace(S)), iterations=it, residual=resid)


def power_spectral_radius(A, tol: float = 1e-10, max_iter: int = 200_000, block: int | None = None,
                          seed: int = 0) -> float:
    """Largest eigenvalue modulus of a dense square matrix.

    Block power (subspace) iteration with re-orthonormalisation every step.
    Ritz values of the small projected matrix resolve complex-conjugate and
    defective dominant eigenvalues that defeat single-vector power iteration.
    If the estimate stagnates without converging, the block is enlarged and
    restarted from a fresh random basis.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return 0.0
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if n <= 2:
        return float(np.max(np.abs(np.linalg.eigvals(A))))
    p = min(n, block or max(6, n // 3))
    rng = np.random.default_rng(seed)
    budget = max_iter
    while True:
        V, _ = np.linalg.qr(rng.standard_normal((n, p)))
        prev = np.inf
        stable = 0
        for it in range(1, budget + 1):
            V, _ = np.linalg.qr(A @ V)
            if it % 5 == 0 or p == n:
                H = V.T @ A @ V
                est = float(np.max(np.abs(np.linalg.eigvals(H))))
                if abs(est - prev) <= tol * max(1.0, est):
                    stable += 1
                    if stable >= 3 or p == n:
                        return est
                else:
                    stable = 0
                prev = est
        if p == n:
            raise NoConvergence("block power iteration did not converge")
        p = min(n, 2 * p)


def mc_stationary_variance(run: Callable[[np.ndarray], Iterable[np.ndarray]], burn_in: int,
                           samples: int, replicates: int) -> tuple[float, float]:
    """Tail-averaged second moment of a stationary chain.

    ``run(replicate_ids)`` must return an iterable yielding, once per step, an
    array of shape ``(R, ...)`` holding each replicate's deviation from the
    target point. The first ``burn_in`` yields are discarded and the squared
    norms of the next ``samples`` are time-averaged per replicate. Returns the
    replicate mean and its standard error.
    """
    reps = np.arange(replicates)
    acc = np.zeros(replicates)
    taken = 0
    for step, dev in enumerate(run(reps)):
        if step < burn_in:
            continue
        dev = np.asarray(dev, dtype=float).reshape(replicates, -1)
        acc += np.sum(dev * dev, axis=1)
        taken += 1
        if taken >= samples:
            break
    if taken < samples:
        raise ValueError(f"chain produced only {taken} samples after burn-in")
    per_rep = acc / samples
    mean = float(per_rep.mean())
    se = float(per_rep.std(ddof=1) / np.sqrt(replicates)) if replicates > 1 else 0.0
    return mean, se


def fd_gradient(f: Callable[[np.ndarray], float], x, h: float | None = None) -> np.ndarray:
    """Central finite-difference gradient with step ``1e-6 * (1 + ||x||)`` by default."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for j in range(x.size):
        e.flat[j] = h
        g.flat[j] = (f(x + e) - f(x - e)) / (2.0 * h)
        e.flat[j] = 0.0
    return g
