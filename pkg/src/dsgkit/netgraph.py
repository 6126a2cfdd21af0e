"""Communication topologies and doubly-stochastic mixing matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (EmptyGraph, InvalidMixingMatrix, InvalidTopology, NonpositiveTau,
                     NonRegularGraph)
from .oracles import dense_eigvalsh

KINDS = ("complete", "star", "ring", "grid", "disconnected", "custom")


@dataclass(frozen=True)
class Topology:
    """Undirected graph on ``n`` nodes; self-loops are implicit.

    Use the class constructors (:meth:`ring`, :meth:`grid`, ...) rather than
    building edge lists by hand.
    """

    kind: str
    n: int
    edges: tuple[tuple[int, int], ...] = ()
    rows: int | None = None
    cols: int | None = None

    def __post_init__(self):
        if self.n == 0:
            raise EmptyGraph("topology has no nodes")
        if self.n < 0:
            raise InvalidTopology(f"node count must be positive, got {self.n}")
        if self.kind not in KINDS:
            raise InvalidTopology(f"unknown topology kind {self.kind!r}")
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidTopology(f"edge ({i}, {j}) out of range for n={self.n}")

    @classmethod
    def _make(cls, kind, n, pairs, **kw) -> "Topology":
        canon = sorted({(min(i, j), max(i, j)) for i, j in pairs if i != j})
        return cls(kind, n, tuple(canon), **kw)

    @classmethod
    def complete(cls, n: int) -> "Topology":
        return cls._make("complete", n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    @classmethod
    def star(cls, n: int) -> "Topology":
        """Node 0 is the hub."""
        return cls._make("star", n, [(0, j) for j in range(1, n)])

    @classmethod
    def ring(cls, n: int) -> "Topology":
        return cls._make("ring", n, [(i, (i + 1) % n) for i in range(n)] if n > 1 else [])

    @classmethod
    def grid(cls, rows: int, cols: int, n: int | None = None) -> "Topology":
        """4-neighbour lattice, nodes numbered row-major."""
        if rows < 1 or cols < 1:
            raise InvalidTopology("grid dimensions must be positive")
        if n is not None and n != rows * cols:
            raise InvalidTopology(f"grid {rows}x{cols} does not have {n} nodes")
        pairs = []
        for r in range(rows):
            for c in range(cols):
                u = r * cols + c
                if c + 1 < cols:
                    pairs.append((u, u + 1))
                if r + 1 < rows:
                    pairs.append((u, u + cols))
        return cls._make("grid", rows * cols, pairs, rows=rows, cols=cols)

    @classmethod
    def disconnected(cls, n: int) -> "Topology":
        return cls._make("disconnected", n, [])

    @classmethod
    def custom(cls, n: int, edges) -> "Topology":
        pairs = [(int(i), int(j)) for i, j in edges]
        for i, j in pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidTopology(f"edge ({i}, {j}) out of range for n={n}")
        return cls._make("custom", n, pairs)

    @classmethod
    def from_spec(cls, spec: dict[str, Any]) -> "Topology":
        """Build from a config mapping such as ``{"kind": "ring", "n": 20}``."""
        kind = spec.get("kind")
        n = spec.get("n")
        if kind == "grid":
            return cls.grid(int(spec["rows"]), int(spec["cols"]), None if n is None else int(n))
        if n is None:
            raise InvalidTopology("topology spec needs 'n'")
        n = int(n)
        if kind == "custom":
            return cls.custom(n, spec.get("edges", []))
        builders = {"complete": cls.complete, "star": cls.star, "ring": cls.ring,
                    "disconnected": cls.disconnected}
        if kind not in builders:
            raise InvalidTopology(f"unknown topology kind {kind!r}")
        return builders[kind](n)

    def adjacency(self) -> np.ndarray:
        """Boolean adjacency without the diagonal."""
        A = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def components(self) -> list[list[int]]:
        A = self.adjacency()
        seen = np.zeros(self.n, dtype=bool)
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            stack, comp = [s], []
            seen[s] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in np.flatnonzero(A[u] & ~seen):
                    seen[v] = True
                    stack.append(int(v))
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1


@dataclass(frozen=True)
class MixingMatrix:
    """Validated symmetric doubly-stochastic gossip matrix with its spectrum."""

    W: np.ndarray
    spectrum: np.ndarray
    gamma: float
    lambda_min: float
    spectral_gap: float
    topology: Topology | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_matrix(cls, W, topology: Topology | None = None, tol: float = 1e-12) -> "MixingMatrix":
        W = np.array(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidMixingMatrix("mixing matrix must be square")
        n = W.shape[0]
        if n == 0:
            raise EmptyGraph("mixing matrix is empty")
        if np.max(np.abs(W - W.T)) > tol:
            raise InvalidMixingMatrix("mixing matrix is not symmetric")
        if np.min(W) < 0:
            raise InvalidMixingMatrix("mixing matrix has negative entries")
        if np.max(np.abs(W.sum(axis=1) - 1.0)) > tol:
            raise InvalidMixingMatrix("rows of the mixing matrix do not sum to one")
        if np.min(np.diag(W)) <= 0:
            raise InvalidMixingMatrix("every node needs a positive self-weight")
        W = 0.5 * (W + W.T)
        spec = dense_eigvalsh(W)
        if abs(spec[0] - 1.0) > 1e-10:
            raise InvalidMixingMatrix(f"largest eigenvalue {spec[0]:.12g} is not 1")
        lam_n = float(spec[-1])
        if lam_n <= -1.0 + 1e-12:
            raise InvalidMixingMatrix(
                f"smallest eigenvalue {lam_n:.6g} is -1; apply shift_mixing(W, tau) to restore lambda_N > -1")
        gamma = float(max(abs(spec[1]), abs(spec[-1]))) if n > 1 else 0.0
        W.setflags(write=False)
        spec.setflags(write=False)
        return cls(W=W, spectrum=spec, gamma=gamma, lambda_min=lam_n, spectral_gap=1.0 - gamma,
                   topology=topology)


def build_mixing(topology: Topology, rule: str = "metropolis") -> MixingMatrix:
    """Mixing matrix supported on ``topology``.

    ``metropolis``: ``W_ij = 1 / (1 + max(deg_i, deg_j))`` on edges, the
    diagonal absorbs the remainder. ``equal-neighbor``: ``W_ij = 1/(deg+1)``
    for every neighbour including the node itself; requires a regular graph.
    """
    n = topology.n
    A = topology.adjacency()
    deg = A.sum(axis=1)
    W = np.zeros((n, n))
    if rule == "metropolis":
        for i, j in topology.edges:
            W[i, j] = W[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    elif rule in ("equal-neighbor", "equal_neighbor"):
        if n > 0 and np.any(deg != deg[0]):
            raise NonRegularGraph("equal-neighbor weights need every node to have the same degree")
        for i, j in topology.edges:
            W[i, j] = W[j, i] = 1.0 / (deg[i] + 1.0)
    else:
        raise InvalidMixingMatrix(f"unknown weight rule {rule!r}")
    W[np.diag_indices(n)] = 1.0 - W.sum(axis=1)
    return MixingMatrix.from_matrix(W, topology=topology)


POSITIVE_TOL = 1e-12


def shift_mixing(W: MixingMatrix, tau: float) -> MixingMatrix:
    """``W_tau = (tau I + W) / (tau + 1)``; eigenvalues map to ``(tau + l)/(tau + 1)``."""
    if not tau > 0:
        raise NonpositiveTau(f"tau must be positive, got {tau}")
    n = W.n
    Wt = (tau * np.eye(n) + W.W) / (tau + 1.0)
    return MixingMatrix.from_matrix(Wt, topology=W.topology)


def assert_assumption3(W: MixingMatrix) -> bool:
    """True iff every eigenvalue of W is strictly positive.

    ``shift_mixing(W, 1)`` always satisfies this because a valid W has
    ``lambda_N > -1`` strictly, so the shifted minimum ``(1 + lambda_N)/2`` is
    strictly positive. Eigenvalues within ``POSITIVE_TOL`` of zero count as zero.
    """
    return bool(W.lambda_min > POSITIVE_TOL)
