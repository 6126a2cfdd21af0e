"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 numerical failure (argparse
usage errors also exit with 2).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from .. import quadratic_exact as qe
from ..algorithms import build_masg_schedule, masg_k1_default, accel_beta
from ..analysis import (alpha_bar, certified_rho, dasg_bound, dsg_bound, fixed_point, masg_stage_bound,
                        mi_check, rho_dsg, s_alpha, tradeoff_alpha, v_s_alpha)
from ..errors import NumericalError, ValidationError
from ..noise import NoiseSpec
from ..objectives import c1_constant
from .config import ExperimentConfig, build_instance
from .selftest import run_selftest
from .sweep import _fmt, run_sweep


def _clean(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _emit_json(obj: Any, out: str | None) -> None:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


class _Instance:
    def __init__(self, args):
        base = ExperimentConfig.load(args.config).base if getattr(args, "config", None) else {}
        self.W, self.suite = build_instance(base.get("objective"), base.get("topology"), base.get("mixing"))
        noise = NoiseSpec.from_spec(base.get("noise", {"kind": "gaussian_iso", "sigma": 1.0}))
        sigma = noise.sigma if noise.kind in ("gaussian_iso", "relative") else 0.0
        if getattr(args, "sigma", None) is not None:
            sigma = args.sigma
        s = self.suite
        self.mu = args.mu if getattr(args, "mu", None) is not None else s.mu
        self.L = args.L if getattr(args, "L", None) is not None else s.lipschitz
        self.lambda_n = args.lambda_n if getattr(args, "lambda_n", None) is not None else self.W.lambda_min
        self.sigma = float(sigma)
        self.N, self.d = s.n, s.dim
        self.gamma = self.W.gamma
        self.x0 = np.zeros((s.n, s.dim))

    @property
    def C1(self) -> float:
        return c1_constant(self.suite)

    def kw(self) -> dict:
        return dict(mu=self.mu, L=self.L, lambda_n=self.lambda_n, sigma=self.sigma, N=self.N)


def _ints(text: str) -> np.ndarray:
    try:
        return np.array([int(t) for t in text.split(",") if t.strip()], dtype=int)
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.bounds:
        cfg.bounds = True
    table = run_sweep(cfg, jobs=args.jobs)
    out = args.out or cfg.output
    if out:
        table.write_csv(out)
    else:
        table.write_csv(sys.stdout)
    if args.summary:
        _emit_json(table.tail_summary(), args.summary)
    return 0


def cmd_analyze(args) -> int:
    inst = _Instance(args)
    alpha = args.alpha if args.alpha is not None else 0.5 * alpha_bar(inst.mu, inst.L, inst.lambda_n)
    if args.quadratic_exact:
        beta = args.beta if args.beta is not None else accel_beta(alpha, inst.mu)
        sp = qe.aq_spectrum(inst.W, alpha, inst.suite)
        vs = qe.var_dsg_exact(sp, inst.sigma, inst.d, alpha)
        va = qe.var_dasg_exact(sp, beta, inst.sigma, inst.d, alpha)
        _emit_json({"alpha": alpha, "beta": beta, "spectrum": sp.mu_list,
                    "rho_dsg": float(np.max(np.abs(sp.mu_list))),
                    "rho_dasg": qe.rho_dasg_quadratic(sp, beta), "var_dsg": vs.var, "var_dasg": va.var,
                    "j_inf_dsg": vs.j_inf, "j_inf_dasg": va.j_inf,
                    "node_avg_bound": qe.node_avg_var_bound(sp, beta, inst.sigma, inst.N, inst.d, alpha)},
                   args.out)
        return 0
    k = _ints(args.k)
    if args.method == "dmasg":
        kt = (inst.L / inst.mu + 1.0) / inst.lambda_n
        k1 = args.k1 if args.k1 is not None else masg_k1_default(args.p, kt)
        rep = masg_stage_bound(k, k1=k1, p=args.p, dist0_opt2=float(np.sum((inst.x0 - inst.suite.x_star) ** 2)),
                               C1=inst.C1, gamma=inst.gamma, **inst.kw())
        sched = build_masg_schedule(k1, args.p, inst.suite, inst.W, int(max(k.max(), 0)) + 1)
        d = rep.to_dict()
        d["stage_boundaries"] = sched.boundaries.tolist()
        _emit_json(d, args.out)
        return 0
    x_inf = fixed_point(inst.W, alpha, inst.suite)
    extra = dict(C1=inst.C1, gamma=inst.gamma, target=args.target)
    if args.method == "dsg":
        rep = dsg_bound(k, alpha, dist0_fixed2=float(np.sum((inst.x0 - x_inf) ** 2)), form=args.form,
                        **extra, **inst.kw())
    else:
        V0 = v_s_alpha(alpha, inst.W, inst.suite, inst.x0, x_inf)
        rep = dasg_bound(k, alpha, V0=V0, **extra, **inst.kw())
    _emit_json(rep.to_dict(), args.out)
    return 0


def cmd_certify(args) -> int:
    inst = _Instance(args)
    beta = args.beta if args.beta is not None else accel_beta(args.alpha, inst.mu)
    if args.auto:
        rho = certified_rho(args.alpha, inst.mu)
    elif args.rho is not None:
        rho = args.rho
    else:
        raise ValidationError("give --rho or --auto")
    P = s_alpha(args.alpha, inst.mu) if args.P is None else np.array(
        [float(t) for t in args.P.split(",")]).reshape(2, 2)
    cert = mi_check(args.alpha, beta, rho, P, inst.mu, inst.L, inst.lambda_n)
    d = cert.to_dict()
    d.update(mu=inst.mu, L=inst.L, lambda_n=inst.lambda_n)
    if args.oracle:
        d["oracle_min_eig"] = float(np.linalg.eigvalsh(cert.residual)[0])
    _emit_json(d, args.out)
    return 0 if cert.feasible else 2


def cmd_tradeoff(args) -> int:
    inst = _Instance(args)
    C1 = args.C1 if args.C1 is not None else inst.C1
    gamma = args.gamma if args.gamma is not None else inst.gamma
    N = args.N if args.N is not None else inst.N
    t = tradeoff_alpha(args.delta, inst.mu, inst.L, inst.lambda_n, inst.sigma, N, C1, gamma)
    d = t.to_dict()
    d.update(mu=inst.mu, L=inst.L, lambda_n=inst.lambda_n, sigma=inst.sigma, N=N, C1=C1, gamma=gamma)
    _emit_json(d, args.out)
    return 0


def cmd_spectrum(args) -> int:
    inst = _Instance(args)
    if args.alpha is None:
        eig = inst.W.spectrum
    else:
        eig = qe.aq_spectrum(inst.W, args.alpha, inst.suite).mu_list
    lines = ["index,eigenvalue"] + [f"{i},{_fmt(v)}" for i, v in enumerate(eig)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.alpha is not None:
        print(f"# rho_dsg(alpha) = {_fmt(rho_dsg(args.alpha, inst.mu, inst.L, inst.lambda_n))}", file=sys.stderr)
    return 0


def cmd_selftest(args) -> int:
    checks = run_selftest()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return 0 if all(c.passed for c in checks) else 2


def _add_instance(p):
    p.add_argument("--config", help="JSON config whose objective/topology/mixing/noise define the instance")
    p.add_argument("--mu", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--lambda-n", dest="lambda_n", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsgkit", description="Decentralized stochastic gradient toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured sweep and write a CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--bounds", action="store_true", help="append the bound_fixed column")
    p.add_argument("--summary", help="write tail-averaged plateaus as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="evaluate error bounds as JSON")
    _add_instance(p)
    p.add_argument("--method", choices=("dsg", "dasg", "dmasg"), default="dsg")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--k", default="0,10,100,1000", help="iterations (stages for dmasg)")
    p.add_argument("--target", choices=("fixed", "opt"), default="fixed")
    p.add_argument("--form", choices=("exact", "simple"), default="exact")
    p.add_argument("--p", type=float, default=7.0)
    p.add_argument("--k1", type=int)
    p.add_argument("--quadratic-exact", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="check the 3x3 matrix inequality")
    _add_instance(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--P", help="four comma-separated entries of the 2x2 matrix (default S_alpha)")
    p.add_argument("--auto", action="store_true", help="use the certified rate for S_alpha")
    p.add_argument("--oracle", action="store_true", help="cross-check with a LAPACK eigensolver")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("tradeoff", help="rate/robustness optimal stepsize")
    _add_instance(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--C1", type=float)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("spectrum", help="eigenvalues of W or of W - alpha Q as CSV")
    _add_instance(p)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("selftest", help="run the oracle cross-checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
