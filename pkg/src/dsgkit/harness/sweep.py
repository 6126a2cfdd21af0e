"""Sweep orchestration and CSV emission."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..algorithms import METRICS, RunConfig, run
from ..analysis import dasg_bound, dsg_bound, fixed_point, v_s_alpha
from ..errors import DsgError
from ..noise import NoiseSpec
from .config import ExperimentConfig, SweepPoint, build_instance

HEADER = ("sweep_id", "method", "alpha", "beta", "k") + METRICS
BOUND_COLUMN = "bound_fixed"
DIVERGED = 1e100


@dataclass
class PointResult:
    point: SweepPoint
    beta: float
    k: np.ndarray
    values: np.ndarray                  # (n_rec, 4)
    tail: dict[str, tuple[float, float]]
    bound: np.ndarray | None = None
    error: str | None = None
    se: np.ndarray | None = None        # standard errors of ``values``


@dataclass
class ResultTable:
    """Replicate-averaged rows keyed by ``(sweep_id, k)``."""

    results: list[PointResult]
    with_bounds: bool = False
    columns: tuple = field(default=HEADER)

    def __post_init__(self):
        self.results = sorted(self.results, key=lambda r: r.point.sweep_id)
        if self.with_bounds:
            self.columns = HEADER + (BOUND_COLUMN,)

    def rows(self):
        for r in self.results:
            for i, k in enumerate(r.k):
                row = [r.point.sweep_id, r.point.method, _fmt(r.point.alpha), _fmt(r.beta), str(int(k))]
                row += [_fmt(v) for v in r.values[i]]
                if self.with_bounds:
                    row.append(_fmt(r.bound[i]) if r.bound is not None else "nan")
                yield row

    def write_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(self.rows())
        finally:
            if own:
                fh.close()

    def tail_summary(self) -> dict[str, dict]:
        """Plateau (tail-averaged) metrics per sweep point with standard errors."""
        out = {}
        for r in self.results:
            p = r.point
            out[p.sweep_id] = {"method": p.method, "alpha": p.alpha, "beta": r.beta,
                               "topology": p.topology, "noise": p.noise, "error": r.error,
                               **{f"tail_{m}": v[0] for m, v in r.tail.items()},
                               **{f"tail_{m}_se": v[1] for m, v in r.tail.items()}}
        return out

    def by_id(self, sweep_id: str) -> PointResult:
        for r in self.results:
            if r.point.sweep_id == sweep_id:
                return r
        raise KeyError(sweep_id)


def _fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _clip(a: np.ndarray) -> np.ndarray:
    """Map overflowed values to ``inf``; every sweep metric is defined, so NaN also means divergence."""
    a = np.array(a, dtype=float)
    bad = ~np.isfinite(a) | (np.abs(a) > DIVERGED)
    a[bad] = np.inf
    return a


def _bound_column(point, beta, W, suite, noise, x0, x_inf, k):
    if noise.kind != "gaussian_iso" and not noise.is_exact:
        return np.full(k.shape, np.nan)
    sigma = 0.0 if noise.is_exact else noise.sigma
    kw = dict(mu=suite.mu, L=suite.lipschitz, lambda_n=W.lambda_min, sigma=sigma, N=suite.n)
    try:
        if point.method == "dsg":
            return dsg_bound(k, point.alpha, dist0_fixed2=float(np.sum((x0 - x_inf) ** 2)), **kw).total
        if point.beta is None:
            V0 = v_s_alpha(point.alpha, W, suite, x0, x_inf)
            return dasg_bound(k, point.alpha, V0=V0, **kw).total
    except DsgError:
        pass
    return np.full(k.shape, np.nan)


def run_point(cfg: ExperimentConfig, point: SweepPoint) -> PointResult:
    """Execute one sweep point; a divergent point yields ``inf`` values instead of failing the sweep."""
    W, suite = build_instance(point.objective, point.topology, point.mixing)
    noise = NoiseSpec.from_spec(point.noise)
    noise.check_suite(suite)
    rc = RunConfig(point.method, point.alpha, point.beta if point.method == "dasg" else None, cfg.iters,
                   cfg.replicates, cfg.record_every, cfg.seed)
    beta = rc.resolved_beta(suite.mu)
    x0 = np.zeros((suite.n, suite.dim))
    x_inf = fixed_point(W, point.alpha, suite)
    tail_start = cfg.iters - max(1, int(math.ceil(cfg.tail_fraction * cfg.iters))) + 1
    tr = run(rc, W, suite, noise, x0, x_inf=x_inf, tail_start=max(0, tail_start))
    values = _clip(np.stack([tr.metric(m) for m in METRICS], axis=1))
    tail = {m: tr.tail_mean(m) for m in METRICS}
    tail = {m: (float(_clip([v[0]])[0]), v[1]) for m, v in tail.items()}
    bound = _bound_column(point, beta, W, suite, noise, x0, x_inf, tr.k) if cfg.bounds else None
    se = np.stack([tr.se[m] for m in METRICS], axis=1)
    return PointResult(point, beta, tr.k, values, tail, bound, se=se)


def _safe_run_point(cfg, point):
    try:
        return run_point(cfg, point)
    except ArithmeticError as exc:
        return PointResult(point, float("nan"), np.array([0]), np.full((1, 4), np.inf),
                           {m: (math.inf, 0.0) for m in METRICS}, error=str(exc))


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Run every sweep point (in parallel when ``jobs > 1``); output order is deterministic."""
    points = cfg.points()
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as ex:
            results = list(ex.map(_safe_run_point, [cfg] * len(points), points))
    else:
        results = [_safe_run_point(cfg, p) for p in points]
    return ResultTable(results, with_bounds=cfg.bounds)
