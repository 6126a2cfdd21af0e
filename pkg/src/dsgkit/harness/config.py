"""JSON experiment configuration and instance construction.

Schema (all keys except ``seed`` have defaults)::

    {
      "name": "demo",
      "seed": 0,                       # mandatory master seed
      "iters": 1000, "replicates": 5, "record_every": 10,
      "tail_fraction": 0.2,            # trailing share of iterations used for plateaus
      "bounds": false,                 # append a bound_fixed column
      "objective": {"kind": "reference"}
                 | {"kind": "quadratic", "n": 3, "d": 2, "mu": 1, "L": 4, "seed": 0,
                    "shared_basis": true}
                 | {"kind": "logistic", "n_nodes": 10, "n_samples": 1000, "d": 100,
                    "sigma_x2": 5, "lam": 0.05, "seed": 0},
      "topology": {"kind": "ring", "n": 10},
      "mixing": {"rule": "metropolis", "tau": 0},
      "noise": {"kind": "gaussian_iso", "sigma": 1.0},
      "method": "dsg", "alpha": 0.01, "beta": null,
      "sweeps": [{"name": "stepsize", "alpha": [0.01, 0.02], "method": ["dsg", "dasg"]}, ...]
    }

Each sweep entry overrides any of ``method``, ``alpha``, ``beta``,
``objective``, ``topology``, ``mixing`` and ``noise``; a list value is an
axis, and the entry expands to the Cartesian product of its axes. Without
``sweeps`` the base parameters form a single point.
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

from ..errors import ConfigError, DimensionMismatch
from ..netgraph import MixingMatrix, Topology, build_mixing, shift_mixing
from ..noise import NoiseSpec
from ..objectives import ObjectiveSuite, random_quadratic_suite, synthetic_logistic_suite
from ..reference import reference_mixing, reference_suite

SWEEP_KEYS = ("method", "alpha", "beta", "objective", "topology", "mixing", "noise")
TOP_KEYS = {"name", "seed", "iters", "replicates", "record_every", "tail_fraction", "bounds",
            "output", "sweeps", "description"} | set(SWEEP_KEYS)


@dataclass(frozen=True)
class SweepPoint:
    sweep_id: str
    method: str
    alpha: float
    beta: float | None
    objective: dict
    topology: dict | None
    mixing: dict
    noise: dict


@dataclass
class ExperimentConfig:
    seed: int
    name: str = "experiment"
    iters: int = 1000
    replicates: int = 5
    record_every: int = 10
    tail_fraction: float = 0.2
    bounds: bool = False
    output: str | None = None
    base: dict[str, Any] = field(default_factory=dict)
    sweeps: list[dict[str, Any]] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in raw or not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
            raise ConfigError("config needs an integer 'seed'")
        cfg = cls(seed=raw["seed"], name=str(raw.get("name", "experiment")),
                  iters=_int(raw, "iters", 1000, 0), replicates=_int(raw, "replicates", 5, 1),
                  record_every=_int(raw, "record_every", 10, 1),
                  tail_fraction=float(raw.get("tail_fraction", 0.2)), bounds=bool(raw.get("bounds", False)),
                  output=raw.get("output"))
        if not 0.0 < cfg.tail_fraction <= 1.0:
            raise ConfigError("tail_fraction must lie in (0, 1]")
        cfg.base = {k: copy.deepcopy(raw[k]) for k in SWEEP_KEYS if k in raw}
        cfg.base.setdefault("method", "dsg")
        cfg.base.setdefault("objective", {"kind": "reference"})
        cfg.base.setdefault("mixing", {"rule": "metropolis", "tau": 0.0})
        cfg.base.setdefault("noise", {"kind": "exact"})
        sweeps = raw.get("sweeps", [])
        if not isinstance(sweeps, list):
            raise ConfigError("'sweeps' must be a list")
        for s in sweeps:
            if not isinstance(s, dict):
                raise ConfigError("each sweep must be an object")
            bad = set(s) - set(SWEEP_KEYS) - {"name"}
            if bad:
                raise ConfigError(f"unknown sweep keys: {sorted(bad)}")
            for k, v in s.items():
                if isinstance(v, list) and not v:
                    raise ConfigError(f"sweep axis {k!r} is empty")
        cfg.sweeps = copy.deepcopy(sweeps)
        cfg.points()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def points(self) -> list[SweepPoint]:
        """Expanded sweep points in declaration order."""
        entries = self.sweeps or [{"name": "base"}]
        out = []
        for si, entry in enumerate(entries):
            name = str(entry.get("name", f"sweep{si}"))
            merged = dict(self.base)
            axes = []
            for k in SWEEP_KEYS:
                if k in entry:
                    merged[k] = entry[k]
            for k in SWEEP_KEYS:
                v = merged.get(k)
                axes.append(v if isinstance(v, list) else [v])
            for j, combo in enumerate(itertools.product(*axes)):
                p = dict(zip(SWEEP_KEYS, combo))
                out.append(_point(f"{si:02d}-{name}-{j:03d}", p))
        return out


def _int(raw, key, default, lo):
    v = raw.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ConfigError(f"'{key}' must be an integer >= {lo}")
    return v


def _point(sweep_id: str, p: dict) -> SweepPoint:
    if p["method"] not in ("dsg", "dasg"):
        raise ConfigError(f"unknown method {p['method']!r}")
    if p.get("alpha") is None:
        raise ConfigError("every sweep point needs 'alpha'")
    for key in ("objective", "mixing", "noise"):
        if not isinstance(p.get(key), dict):
            raise ConfigError(f"'{key}' must be an object")
    if p.get("topology") is not None and not isinstance(p["topology"], dict):
        raise ConfigError("'topology' must be an object")
    NoiseSpec.from_spec(p["noise"])
    beta = p.get("beta")
    return SweepPoint(sweep_id, p["method"], float(p["alpha"]), None if beta is None else float(beta),
                      p["objective"], p.get("topology"), p["mixing"], p["noise"])


def _freeze(spec: dict | None) -> str:
    return json.dumps(spec, sort_keys=True)


@lru_cache(maxsize=16)
def _suite_cached(key: str) -> ObjectiveSuite:
    spec = json.loads(key)
    if "dim" in spec:
        spec.setdefault("d", spec["dim"])
    kind = spec.get("kind", "reference")
    if kind == "reference":
        return reference_suite(int(spec.get("seed", 0)))
    if kind == "quadratic":
        return random_quadratic_suite(int(spec.get("n", 3)), int(spec.get("d", 2)),
                                      mu=float(spec.get("mu", 1.0)), L=float(spec.get("L", 4.0)),
                                      seed=int(spec.get("seed", 0)),
                                      shared_basis=bool(spec.get("shared_basis", True)),
                                      p_scale=float(spec.get("p_scale", 1.0)))
    if kind == "logistic":
        return synthetic_logistic_suite(int(spec.get("n_nodes", 10)), int(spec.get("n_samples", 1000)),
                                        int(spec.get("d", 100)), float(spec.get("sigma_x2", 5.0)),
                                        float(spec.get("lam", 0.05)), int(spec.get("seed", 0)),
                                        mu=None if spec.get("mu") is None else float(spec["mu"]))
    raise ConfigError(f"unknown objective kind {kind!r}")


def build_suite(spec: dict | None) -> ObjectiveSuite:
    return _suite_cached(_freeze(spec or {"kind": "reference"}))


def build_mixing_from_spec(topology: dict | None, mixing: dict | None, suite: ObjectiveSuite | None = None,
                           objective: dict | None = None) -> MixingMatrix:
    """Mixing matrix for a topology spec; the reference objective defaults to the reference network."""
    mixing = mixing or {}
    if topology is None:
        if (objective or {"kind": "reference"}).get("kind", "reference") != "reference":
            raise ConfigError("a 'topology' is required for non-reference objectives")
        W = reference_mixing()
    else:
        W = build_mixing(Topology.from_spec(topology), mixing.get("rule", "metropolis"))
        tau = float(mixing.get("tau", 0.0))
        if tau:
            W = shift_mixing(W, tau)
    if suite is not None and W.n != suite.n:
        raise DimensionMismatch(f"topology has {W.n} nodes but the objective has {suite.n}")
    return W


def build_instance(objective: dict | None = None, topology: dict | None = None, mixing: dict | None = None
                   ) -> tuple[MixingMatrix, ObjectiveSuite]:
    suite = build_suite(objective)
    return build_mixing_from_spec(topology, mixing, suite, objective), suite
