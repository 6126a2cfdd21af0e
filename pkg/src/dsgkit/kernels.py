"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly; otherwise, or when
``DSGKIT_PURE_PYTHON=1`` is set, the numpy versions are used. Both expose the
same functions with the same counter-based random streams.
"""

from __future__ import annotations

import os

from . import _pykernels

try:  # pragma: no cover - depends on build
    from . import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

mix64_int = _pykernels.mix64_int

HAVE_CYTHON = _ckernels is not None
BACKEND = "cython" if HAVE_CYTHON and os.environ.get("DSGKIT_PURE_PYTHON", "0") != "1" else "python"


def use_backend(name: str) -> str:
    """Switch the active backend; returns the previous one."""
    global BACKEND
    if name not in ("cython", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "cython" and not HAVE_CYTHON:
        raise RuntimeError("compiled extension is not available")
    prev, BACKEND = BACKEND, name
    return prev


def _impl():
    return _ckernels if BACKEND == "cython" else _pykernels


def stream_key(seed: int, tag: int) -> int:
    """Derive a 64-bit stream key from a master seed and a purpose tag."""
    return mix64_int(mix64_int(int(seed) & ((1 << 64) - 1)) ^ int(tag))


def gaussian_block(key, replicates, iteration, n_nodes, dim):
    return _impl().gaussian_block(key, replicates, iteration, n_nodes, dim)


def uniform_block(key, replicates, iteration, n_nodes, size):
    return _impl().uniform_block(key, replicates, iteration, n_nodes, size)


def jacobi_eigvalsh(a, tol=1e-12, max_sweeps=100):
    return _impl().jacobi_eigvalsh(a, tol, max_sweeps)


def simulate_quadratic(*args, **kwargs):
    return _impl().simulate_quadratic(*args, **kwargs)


simulate_quadratic.__doc__ = _pykernels.simulate_quadratic.__doc__
