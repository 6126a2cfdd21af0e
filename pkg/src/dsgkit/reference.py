"""Small fixed instance used by the self-test, the benchmark and the acceptance suite.

Three-node ring with Metropolis weights shifted by ``tau = 1`` (spectrum
``{1, 1/2, 1/2}``), a two-dimensional shared-basis quadratic suite with
``mu = 1`` and ``L = 4``, isotropic Gaussian gradient noise with ``sigma = 1``
and the zero start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netgraph import MixingMatrix, Topology, build_mixing, shift_mixing
from .noise import NoiseSpec
from .objectives import ObjectiveSuite, c1_constant, random_quadratic_suite

N_NODES = 3
DIM = 2
MU = 1.0
L = 4.0
SIGMA = 1.0


@dataclass(frozen=True)
class ReferenceInstance:
    W: MixingMatrix
    suite: ObjectiveSuite
    noise: NoiseSpec
    x0: np.ndarray

    @property
    def sigma(self) -> float:
        return self.noise.sigma

    @property
    def C1(self) -> float:
        return c1_constant(self.suite)

    def bound_kwargs(self) -> dict:
        """Keyword arguments shared by the bound functions in :mod:`dsgkit.analysis`."""
        return dict(mu=self.suite.mu, L=self.suite.lipschitz, lambda_n=self.W.lambda_min,
                    sigma=self.sigma, N=self.suite.n)


def reference_mixing() -> MixingMatrix:
    return shift_mixing(build_mixing(Topology.ring(N_NODES)), 1.0)


def reference_suite(seed: int = 0) -> ObjectiveSuite:
    return random_quadratic_suite(N_NODES, DIM, mu=MU, L=L, seed=seed, shared_basis=True)


def reference_instance(seed: int = 0, sigma: float = SIGMA) -> ReferenceInstance:
    return ReferenceInstance(reference_mixing(), reference_suite(seed), NoiseSpec.gaussian(sigma),
                             np.zeros((N_NODES, DIM)))
