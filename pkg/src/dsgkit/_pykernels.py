"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop for
loop. Integer hashing is bit-identical between the two, floating point
results agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NoConvergence

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_TWO_M53 = 1.0 / 9007199254740992.0


def mix64_int(z: int) -> int:
    """splitmix64 output step on a Python int (used for key derivation)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _base_hash(key: int, replicates: np.ndarray, n_nodes: int, iteration: int) -> np.ndarray:
    reps = np.asarray(replicates, dtype=np.int64).astype(np.uint64)
    h = _mix64(np.uint64(key) ^ reps[:, None, None])
    nodes = np.arange(n_nodes, dtype=np.uint64)[None, :, None]
    h = _mix64(h ^ nodes)
    return _mix64(h ^ np.uint64(iteration))


def gaussian_block(key: int, replicates, iteration: int, n_nodes: int, dim: int) -> np.ndarray:
    """Standard normals indexed by (replicate, node, iteration, coordinate).

    Returns an array of shape ``(len(replicates), n_nodes, dim)``. Every entry
    is a pure function of its coordinates, so any batching of replicates
    reproduces the same numbers.
    """
    h = _base_hash(key, replicates, n_nodes, iteration)
    j = np.arange(dim, dtype=np.uint64)
    h1 = _mix64(h ^ (np.uint64(2) * j))
    h2 = _mix64(h ^ (np.uint64(2) * j + np.uint64(1)))
    u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_M53
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * _TWO_M53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def uniform_block(key: int, replicates, iteration: int, n_nodes: int, size: int) -> np.ndarray:
    """Uniforms on [0, 1) indexed like :func:`gaussian_block`."""
    h = _base_hash(key, replicates, n_nodes, iteration)
    j = np.arange(size, dtype=np.uint64)
    return (_mix64(h ^ j) >> np.uint64(11)).astype(np.float64) * _TWO_M53


def jacobi_eigvalsh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Symmetric matrix. Only the values are read; the input is not modified.
    tol : float
        Stop once the off-diagonal Frobenius norm is below ``tol * ||a||_F``.
    max_sweeps : int
        Raise :class:`NoConvergence` if not converged after this many sweeps.

    Returns
    -------
    eigenvalues : ndarray
        Sorted in descending order.
    sweeps : int
        Number of full sweeps performed.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    scale = float(np.sqrt(np.sum(a * a)))
    if n <= 1 or scale == 0.0:
        return np.sort(np.diag(a))[::-1].copy(), 0
    target = tol * scale
    offdiag = ~np.eye(n, dtype=bool)
    sweeps = 0
    while True:
        off = float(np.sqrt(np.sum(a[offdiag] ** 2)))
        if not off > target:
            break
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1].copy(), sweeps


def simulate_quadratic(W, Q, p, x0, xprev0, alphas, betas, restarts, sigma, key,
                       replicates, record_steps, x_star, x_inf, tail_start):
    """Run D-ASG (D-SG when beta is 0) on a quadratic suite with Gaussian noise.

    Step ``k`` maps ``x^(k)`` to ``x^(k+1)`` using ``alphas[k]``, ``betas[k]``;
    when ``restarts[k]`` is set the lagged iterate is reset to the current one
    first. Noise for step ``k`` is ``sigma/sqrt(d)`` times the counter normals
    at iteration ``k``.

    Returns
    -------
    dict with
        ``sum``, ``sumsq`` : (n_record, 4) replicate sums of the metrics
        (dist2_opt, dist2_fixed, avg_dist2_opt, consensus_err) at each recorded k;
        ``tail`` : (R, 4 + d) per-replicate time averages over
        ``tail_start <= k <= K`` of the same metrics followed by the squared
        deviation of each coordinate of the node average from its limit;
        ``x`` : (R, N, d) final iterates.
    """
    W = np.asarray(W, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    reps = np.asarray(replicates, dtype=np.int64)
    R = reps.shape[0]
    N, d = p.shape
    K = len(alphas)
    have_inf = x_inf is not None
    xinf = np.asarray(x_inf, dtype=np.float64) if have_inf else None
    xbar_ref = xinf.mean(axis=0) if have_inf else np.asarray(x_star, dtype=np.float64)
    xs = np.asarray(x_star, dtype=np.float64)

    x = np.broadcast_to(np.asarray(x0, dtype=np.float64), (R, N, d)).copy()
    xp = np.broadcast_to(np.asarray(xprev0, dtype=np.float64), (R, N, d)).copy()

    record_steps = np.asarray(record_steps, dtype=np.int64)
    n_rec = record_steps.shape[0]
    sums = np.zeros((n_rec, 4))
    sumsq = np.zeros((n_rec, 4))
    tail = np.zeros((R, 4 + d))
    n_tail = 0
    noise_scale = sigma / math.sqrt(d) if sigma > 0 else 0.0

    def metrics(x):
        xbar = x.mean(axis=1)
        m = np.empty((R, 4))
        m[:, 0] = np.sum((x - xs) ** 2, axis=(1, 2))
        m[:, 1] = np.sum((x - xinf) ** 2, axis=(1, 2)) if have_inf else np.nan
        m[:, 2] = np.sum((xbar - xs) ** 2, axis=1)
        m[:, 3] = np.sum((x - xbar[:, None, :]) ** 2, axis=(1, 2))
        return m, xbar

    rec = 0
    for k in range(K + 1):
        if rec < n_rec and record_steps[rec] == k:
            m, _ = metrics(x)
            sums[rec] = m.sum(axis=0)
            sumsq[rec] = (m * m).sum(axis=0)
            rec += 1
        if 0 <= tail_start <= k:
            m, xbar = metrics(x)
            tail[:, :4] += m
            tail[:, 4:] += (xbar - xbar_ref) ** 2
            n_tail += 1
        if k == K:
            break
        if restarts[k]:
            xp = x.copy()
        beta = betas[k]
        y = x if beta == 0.0 else (1.0 + beta) * x - beta * xp
        g = np.einsum("nij,rnj->rni", Q, y) - p
        if noise_scale > 0.0:
            g = g + noise_scale * gaussian_block(key, reps, k, N, d)
        xnew = np.matmul(W, y) - alphas[k] * g
        xp = x
        x = xnew
    if n_tail:
        tail /= n_tail
    return {"sum": sums, "sumsq": sumsq, "tail": tail, "x": x}
