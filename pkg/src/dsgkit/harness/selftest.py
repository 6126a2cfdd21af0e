"""Oracle cross-checks run by ``dsgkit selftest``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels, oracles
from .. import quadratic_exact as qe
from ..algorithms import accel_beta
from ..analysis import alpha_bar, certified_rho, mi_check, rho_dsg, s_alpha
from ..objectives import synthetic_logistic_suite
from ..reference import reference_instance
from .config import ExperimentConfig
from .sweep import run_sweep

SELFTEST_CONFIG = {
    "name": "selftest", "seed": 7, "iters": 300, "replicates": 400, "record_every": 25, "bounds": True,
    "objective": {"kind": "reference"}, "noise": {"kind": "gaussian_iso", "sigma": 1.0},
    "sweeps": [{"name": "bounds", "method": ["dsg", "dasg"], "alpha": [0.02, 0.1]}],
}


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def run_selftest() -> list[Check]:
    ref = reference_instance()
    W, suite = ref.W, ref.suite
    N, d, mu, L, lam = suite.n, suite.dim, suite.mu, suite.lipschitz, W.lambda_min
    a = 0.5 * alpha_bar(mu, L, lam)
    b = accel_beta(a, mu)
    sp = qe.aq_spectrum(W, a, suite)
    out = []

    A = qe.aq_matrix(W, a, suite)
    ly = oracles.lyapunov_iterate(A, a * a / d * np.eye(N * d))
    v = qe.var_dsg_exact(sp, 1.0, d, a).var
    out.append(Check("dsg variance vs Lyapunov", _rel(v, ly.trace) < 1e-8, f"{v:.12g} vs {ly.trace:.12g}"))

    M = qe.dasg_matrix(W, a, b, suite)
    Sw = np.zeros((2 * N * d, 2 * N * d))
    Sw[:N * d, :N * d] = a * a / d * np.eye(N * d)
    ly2 = oracles.lyapunov_iterate(M, Sw)
    t2 = float(np.trace(ly2.Sigma[:N * d, :N * d]))
    v2 = qe.var_dasg_exact(sp, b, 1.0, d, a).var
    out.append(Check("dasg variance vs Lyapunov", _rel(v2, t2) < 1e-8, f"{v2:.12g} vs {t2:.12g}"))

    r1, r2 = float(np.max(np.abs(sp.mu_list))), rho_dsg(a, mu, L, lam)
    out.append(Check("dsg spectral radius", abs(r1 - r2) < 1e-10, f"{r1:.15g} vs {r2:.15g}"))

    r3, r4 = qe.rho_dasg_quadratic(sp, b), oracles.power_spectral_radius(M)
    out.append(Check("dasg spectral radius vs power iteration", abs(r3 - r4) < 1e-6, f"{r3:.12g} vs {r4:.12g}"))

    grid = np.geomspace(1e-4, 1.0, 20) * alpha_bar(mu, L, lam)
    slack = min(mi_check(x, accel_beta(x, mu), certified_rho(x, mu), s_alpha(x, mu), mu, L, lam).min_eig_slack
                for x in grid)
    out.append(Check("matrix inequality with certified rate", slack >= -1e-10, f"min slack {slack:.3e}"))

    lg = synthetic_logistic_suite(2, 40, 5, seed=3)
    x = np.random.default_rng(0).standard_normal(5)
    f = lg.locals[0]
    fd = oracles.fd_gradient(f.value, x)
    g = f.grad(x)
    err = float(np.linalg.norm(fd - g) / np.linalg.norm(g))
    out.append(Check("logistic gradient vs finite differences", err < 1e-5, f"relative error {err:.2e}"))

    if kernels.HAVE_CYTHON:
        key = kernels.stream_key(1, 2)
        reps = np.arange(4)
        prev = kernels.use_backend("python")
        py = kernels.gaussian_block(key, reps, 3, N, d)
        kernels.use_backend("cython")
        cy = kernels.gaussian_block(key, reps, 3, N, d)
        kernels.use_backend(prev)
        out.append(Check("compiled and pure-Python streams agree", bool(np.array_equal(py, cy)),
                         f"max diff {np.max(np.abs(py - cy)):.1e}"))

    table = run_sweep(ExperimentConfig.from_dict(SELFTEST_CONFIG))
    worst = np.inf
    for r in table.results:
        emp = r.values[:, 1] - 3.0 * r.se[:, 1]
        worst = min(worst, float(np.min(r.bound * (1 + 1e-12) - emp)))
    out.append(Check("bound columns dominate empirical dist2_fixed (3-sigma)", worst >= 0.0, f"min margin {worst:.3e}"))
    return out
