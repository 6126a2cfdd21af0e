# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, fabs, M_PI, NAN
from libc.stdint cimport uint64_t, int64_t

from .errors import NoConvergence

cnp.import_array()

cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t base_hash(uint64_t key, int64_t rep, Py_ssize_t node, Py_ssize_t it) nogil:
    cdef uint64_t h = mix64(key ^ <uint64_t>rep)
    h = mix64(h ^ <uint64_t>node)
    return mix64(h ^ <uint64_t>it)


cdef inline double normal_from(uint64_t h, Py_ssize_t j) nogil:
    cdef uint64_t h1 = mix64(h ^ (<uint64_t>(2 * j)))
    cdef uint64_t h2 = mix64(h ^ (<uint64_t>(2 * j + 1)))
    cdef double u1 = (<double>(h1 >> 11) + 1.0) * TWO_M53
    cdef double u2 = <double>(h2 >> 11) * TWO_M53
    return sqrt(-2.0 * log(u1)) * cos(2.0 * M_PI * u2)


def gaussian_block(key, replicates, Py_ssize_t iteration, Py_ssize_t n_nodes, Py_ssize_t dim):
    cdef int64_t[::1] reps = np.ascontiguousarray(replicates, dtype=np.int64)
    cdef Py_ssize_t R = reps.shape[0], r, i, j
    cdef uint64_t k = <uint64_t>int(key), h
    out = np.empty((R, n_nodes, dim))
    cdef double[:, :, ::1] o = out
    with nogil:
        for r in range(R):
            for i in range(n_nodes):
                h = base_hash(k, reps[r], i, iteration)
                for j in range(dim):
                    o[r, i, j] = normal_from(h, j)
    return out


def uniform_block(key, replicates, Py_ssize_t iteration, Py_ssize_t n_nodes, Py_ssize_t size):
    cdef int64_t[::1] reps = np.ascontiguousarray(replicates, dtype=np.int64)
    cdef Py_ssize_t R = reps.shape[0], r, i, j
    cdef uint64_t k = <uint64_t>int(key), h
    out = np.empty((R, n_nodes, size))
    cdef double[:, :, ::1] o = out
    with nogil:
        for r in range(R):
            for i in range(n_nodes):
                h = base_hash(k, reps[r], i, iteration)
                for j in range(size):
                    o[r, i, j] = <double>(mix64(h ^ <uint64_t>j) >> 11) * TWO_M53
    return out


def jacobi_eigvalsh(a, double tol=1e-12, int max_sweeps=100):
    cdef double[:, ::1] m = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = m.shape[0], p, q, i
    cdef double total = 0.0, diag2, off, target, apq, theta, t, c, s, xp, xq
    cdef int sweeps = 0
    for p in range(n):
        for q in range(n):
            total += m[p, q] * m[p, q]
    if n <= 1 or total == 0.0:
        return np.sort(np.diag(np.asarray(m)))[::-1].copy(), 0
    target = tol * sqrt(total)
    while True:
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += m[p, q] * m[p, q]
        off = sqrt(off)
        if not off > target:
            break
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
        sweeps += 1
        with nogil:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = m[p, q]
                    if apq == 0.0:
                        continue
                    theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for i in range(n):
                        xp = m[i, p]
                        xq = m[i, q]
                        m[i, p] = c * xp - s * xq
                        m[i, q] = s * xp + c * xq
                    for i in range(n):
                        xp = m[p, i]
                        xq = m[q, i]
                        m[p, i] = c * xp - s * xq
                        m[q, i] = s * xp + c * xq
                    m[p, q] = 0.0
                    m[q, p] = 0.0
    return np.sort(np.diag(np.asarray(m)))[::-1].copy(), sweeps


cdef void _metrics(double[:, ::1] x, double[::1] xs, double[:, ::1] xinf, bint have_inf,
                   double[::1] xbar, double* m) nogil:
    cdef Py_ssize_t N = x.shape[0], d = x.shape[1], i, j
    cdef double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, diff
    for j in range(d):
        xbar[j] = 0.0
    for i in range(N):
        for j in range(d):
            xbar[j] += x[i, j]
    for j in range(d):
        xbar[j] /= N
        diff = xbar[j] - xs[j]
        a2 += diff * diff
    for i in range(N):
        for j in range(d):
            diff = x[i, j] - xs[j]
            a0 += diff * diff
            diff = x[i, j] - xbar[j]
            a3 += diff * diff
            if have_inf:
                diff = x[i, j] - xinf[i, j]
                a1 += diff * diff
    m[0] = a0
    m[1] = a1 if have_inf else NAN
    m[2] = a2
    m[3] = a3


def simulate_quadratic(W, Q, p, x0, xprev0, alphas, betas, restarts, double sigma, key,
                       replicates, record_steps, x_star, x_inf, Py_ssize_t tail_start):
    cdef double[:, ::1] Wv = np.array(W, dtype=np.float64, order="C")
    cdef double[:, :, ::1] Qv = np.array(Q, dtype=np.float64, order="C")
    cdef double[:, ::1] pv = np.array(p, dtype=np.float64, order="C")
    cdef double[:, ::1] x0v = np.array(x0, dtype=np.float64, order="C")
    cdef double[:, ::1] xp0v = np.array(xprev0, dtype=np.float64, order="C")
    cdef double[::1] al = np.array(alphas, dtype=np.float64, order="C")
    cdef double[::1] be = np.array(betas, dtype=np.float64, order="C")
    cdef cnp.uint8_t[::1] rs = np.array(restarts, dtype=np.uint8, order="C")
    cdef int64_t[::1] reps = np.array(replicates, dtype=np.int64, order="C")
    cdef int64_t[::1] rec = np.array(record_steps, dtype=np.int64, order="C")
    cdef double[::1] xs = np.array(x_star, dtype=np.float64, order="C")
    cdef bint have_inf = x_inf is not None
    cdef Py_ssize_t N = pv.shape[0], d = pv.shape[1], K = al.shape[0]
    cdef Py_ssize_t R = reps.shape[0], n_rec = rec.shape[0]
    xinf_arr = np.array(x_inf, dtype=np.float64, order="C") if have_inf else np.zeros((N, d))
    cdef double[:, ::1] xinf = xinf_arr
    ref_arr = xinf_arr.mean(axis=0) if have_inf else np.array(xs, dtype=np.float64)
    cdef double[::1] xref = np.array(ref_arr, order="C")

    sums_arr = np.zeros((n_rec, 4))
    sumsq_arr = np.zeros((n_rec, 4))
    tail_arr = np.zeros((R, 4 + d))
    xout_arr = np.empty((R, N, d))
    cdef double[:, ::1] sums = sums_arr
    cdef double[:, ::1] sumsq = sumsq_arr
    cdef double[:, ::1] tail = tail_arr
    cdef double[:, :, ::1] xout = xout_arr

    cdef double[:, ::1] x = np.empty((N, d))
    cdef double[:, ::1] xprev = np.empty((N, d))
    cdef double[:, ::1] y = np.empty((N, d))
    cdef double[:, ::1] g = np.empty((N, d))
    cdef double[:, ::1] xnew = np.empty((N, d))
    cdef double[::1] xbar = np.empty(d)
    cdef double m[4]
    cdef double noise_scale = sigma / sqrt(<double>d) if sigma > 0 else 0.0
    cdef uint64_t ukey = <uint64_t>int(key), h
    cdef Py_ssize_t r, k, i, j, l, ri, n_tail
    cdef double beta, alpha, acc, diff
    cdef bint use_tail = tail_start >= 0

    with nogil:
        for r in range(R):
            for i in range(N):
                for j in range(d):
                    x[i, j] = x0v[i, j]
                    xprev[i, j] = xp0v[i, j]
            ri = 0
            n_tail = 0
            for k in range(K + 1):
                if (ri < n_rec and rec[ri] == k) or (use_tail and k >= tail_start):
                    _metrics(x, xs, xinf, have_inf, xbar, m)
                    if ri < n_rec and rec[ri] == k:
                        for l in range(4):
                            sums[ri, l] += m[l]
                            sumsq[ri, l] += m[l] * m[l]
                        ri += 1
                    if use_tail and k >= tail_start:
                        for l in range(4):
                            tail[r, l] += m[l]
                        for j in range(d):
                            diff = xbar[j] - xref[j]
                            tail[r, 4 + j] += diff * diff
                        n_tail += 1
                if k == K:
                    break
                if rs[k]:
                    for i in range(N):
                        for j in range(d):
                            xprev[i, j] = x[i, j]
                beta = be[k]
                alpha = al[k]
                for i in range(N):
                    for j in range(d):
                        if beta == 0.0:
                            y[i, j] = x[i, j]
                        else:
                            y[i, j] = (1.0 + beta) * x[i, j] - beta * xprev[i, j]
                for i in range(N):
                    if noise_scale > 0.0:
                        h = base_hash(ukey, reps[r], i, k)
                    for j in range(d):
                        acc = -pv[i, j]
                        for l in range(d):
                            acc = acc + Qv[i, j, l] * y[i, l]
                        if noise_scale > 0.0:
                            acc = acc + noise_scale * normal_from(h, j)
                        g[i, j] = acc
                for i in range(N):
                    for j in range(d):
                        acc = 0.0
                        for l in range(N):
                            acc = acc + Wv[i, l] * y[l, j]
                        xnew[i, j] = acc - alpha * g[i, j]
                for i in range(N):
                    for j in range(d):
                        xprev[i, j] = x[i, j]
                        x[i, j] = xnew[i, j]
            if n_tail > 0:
                for l in range(4 + d):
                    tail[r, l] /= n_tail
            for i in range(N):
                for j in range(d):
                    xout[r, i, j] = x[i, j]
    return {"sum": sums_arr, "sumsq": sumsq_arr, "tail": tail_arr, "x": xout_arr}
