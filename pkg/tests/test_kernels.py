from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsgkit import _pykernels, kernels
from dsgkit.errors import NoConvergence

needs_cython = pytest.mark.skipif(not kernels.HAVE_CYTHON, reason="compiled extension not built")


def _both(fn, *args):
    prev = kernels.use_backend("python")
    try:
        a = fn(*args)
        kernels.use_backend("cython")
        b = fn(*args)
    finally:
        kernels.use_backend(prev)
    return a, b


def test_splitmix_reference_value():
    # first output of the splitmix64 generator seeded with 0
    assert kernels.mix64_int(0) == 0xE220A8397B1DCDAF


def test_stream_key_distinct():
    keys = {kernels.stream_key(s, t) for s in range(50) for t in (1, 2, 3)}
    assert len(keys) == 150


def test_normal_moments():
    z = kernels.gaussian_block(kernels.stream_key(0, 1), np.arange(20_000), 0, 5, 4)
    assert z.shape == (20_000, 5, 4)
    n = z.size
    assert abs(z.mean()) < 5 / math.sqrt(n)
    assert abs(z.var() - 1.0) < 5 * math.sqrt(2.0 / n)
    assert abs(np.mean(z ** 3)) < 5 * math.sqrt(15.0 / n)


def test_uniform_range():
    u = kernels.uniform_block(kernels.stream_key(0, 2), np.arange(100), 4, 3, 50)
    assert u.shape == (100, 3, 50)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * math.sqrt(1 / 12 / u.size)


@needs_cython
def test_backends_agree_streams():
    key = kernels.stream_key(77, 5)
    reps = np.arange(3, 40)
    a, b = _both(kernels.gaussian_block, key, reps, 11, 4, 3)
    assert np.allclose(a, b, rtol=1e-14, atol=1e-15)      # libm vs numpy transcendental rounding
    a, b = _both(kernels.uniform_block, key, reps, 11, 4, 9)
    assert np.array_equal(a, b)


@needs_cython
def test_backends_agree_simulation(ref):
    s, W = ref.suite, ref.W
    K = 60
    alphas = np.full(K, 0.05)
    betas = np.full(K, 0.4)
    restarts = np.zeros(K, np.uint8)
    restarts[[0, 30]] = 1
    rec = np.array([0, 7, 30, 60])
    args = (W.W, s.Q, s.P, np.ones((3, 2)), np.zeros((3, 2)), alphas, betas, restarts, 1.0,
            kernels.stream_key(2, 9), np.arange(10), rec, s.x_star, np.zeros((3, 2)), 40)
    a, b = _both(kernels.simulate_quadratic, *args)
    for key in ("sum", "sumsq", "tail", "x"):
        assert np.allclose(a[key], b[key], rtol=1e-13, atol=1e-15)


@given(st.integers(1, 9), st.integers(0, 10_000))
def test_jacobi_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    A = A + A.T
    ev, sweeps = _pykernels.jacobi_eigvalsh(A)
    assert np.allclose(ev, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-10 * max(1.0, np.abs(A).max()))
    assert np.all(np.diff(ev) <= 0)
    if kernels.HAVE_CYTHON:
        ev2, sweeps2 = _both(kernels.jacobi_eigvalsh, A)[1]
        assert np.allclose(ev, ev2, atol=1e-12 * max(1.0, np.abs(A).max()))


def test_jacobi_no_convergence():
    A = np.random.default_rng(0).standard_normal((12, 12))
    with pytest.raises(NoConvergence):
        _pykernels.jacobi_eigvalsh(A + A.T, max_sweeps=1)


def test_backend_switch():
    prev = kernels.use_backend("python")
    assert kernels.BACKEND == "python"
    kernels.use_backend(prev)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")
