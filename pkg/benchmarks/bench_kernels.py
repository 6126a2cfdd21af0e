"""Compiled vs pure-Python kernel timings.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat 3]``. Prints one line
per kernel with the best wall time of each backend and the speed-up.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from dsgkit import kernels
from dsgkit.algorithms import RunConfig, run
from dsgkit.noise import NoiseSpec
from dsgkit.objectives import synthetic_logistic_suite
from dsgkit.netgraph import Topology, build_mixing
from dsgkit.reference import reference_instance


def _cases():
    ref = reference_instance()
    s, W = ref.suite, ref.W
    K = 2000
    alphas, betas = np.full(K, 0.05), np.full(K, 0.6)
    restarts = np.zeros(K, np.uint8)
    rec = np.arange(0, K + 1, 100)
    sim_args = (W.W, s.Q, s.P, np.zeros((3, 2)), np.zeros((3, 2)), alphas, betas, restarts, 1.0,
                kernels.stream_key(0, 1), np.arange(64), rec, s.x_star, np.zeros((3, 2)), K // 2)
    A = np.random.default_rng(0).standard_normal((60, 60))
    A = A + A.T
    logi = synthetic_logistic_suite(n_nodes=10, n_samples=1000, d=100, seed=0)
    Wl = build_mixing(Topology.ring(10))
    cfg = RunConfig("dsg", alpha=0.02, iters=200, replicates=2, record_every=50)
    return {
        "simulate_quadratic (64 reps x 2000 iters)": lambda: kernels.simulate_quadratic(*sim_args),
        "gaussian_block (4096 x 10 x 100)": lambda: kernels.gaussian_block(kernels.stream_key(0, 1),
                                                                          np.arange(4096), 3, 10, 100),
        "uniform_block (4096 x 10 x 100)": lambda: kernels.uniform_block(kernels.stream_key(0, 2),
                                                                        np.arange(4096), 3, 10, 100),
        "jacobi_eigvalsh (60 x 60)": lambda: kernels.jacobi_eigvalsh(A),
        "logistic minibatch run (2 reps x 200 iters)": lambda: run(cfg, Wl, logi, NoiseSpec.minibatch(0.1)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.HAVE_CYTHON else [])
    print(f"compiled extension available: {kernels.HAVE_CYTHON}")
    prev = kernels.BACKEND
    try:
        for name, fn in _cases().items():
            times = {}
            for b in backends:
                kernels.use_backend(b)
                fn()
                times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            line = f"{name:48s} python {times['python'] * 1e3:9.2f} ms"
            if "cython" in times:
                line += f"   cython {times['cython'] * 1e3:9.2f} ms   speed-up {times['python'] / times['cython']:6.1f}x"
            print(line)
    finally:
        kernels.use_backend(prev)


if __name__ == "__main__":
    main()
