from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsgkit.errors import (EmptyGraph, InvalidMixingMatrix, InvalidTopology, NonpositiveTau,
                           NonRegularGraph)
from dsgkit.netgraph import MixingMatrix, Topology, assert_assumption3, build_mixing, shift_mixing


def _lapack(W):
    return np.sort(np.linalg.eigvalsh(W))[::-1]


def test_ring3_equal_neighbor_spectrum():
    M = build_mixing(Topology.ring(3), "equal-neighbor")
    assert np.allclose(M.W, 1.0 / 3.0, atol=1e-15)
    assert np.allclose(M.spectrum, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(M.spectrum, _lapack(M.W), atol=1e-10)
    assert M.gamma == pytest.approx(0.0, abs=1e-12)


def test_disconnected_is_identity():
    M = build_mixing(Topology.disconnected(2))
    assert np.array_equal(M.W, np.eye(2))
    assert np.allclose(M.spectrum, [1.0, 1.0])
    assert M.gamma == pytest.approx(1.0)
    assert M.spectral_gap == pytest.approx(0.0)


def test_star3_metropolis():
    M = build_mixing(Topology.star(3))
    expect = np.array([[1 / 3, 1 / 3, 1 / 3], [1 / 3, 2 / 3, 0.0], [1 / 3, 0.0, 2 / 3]])
    assert np.allclose(M.W, expect, atol=1e-15)
    assert np.allclose(M.spectrum, [1.0, 2 / 3, 0.0], atol=1e-10)
    assert np.allclose(M.spectrum, _lapack(expect), atol=1e-10)
    assert M.gamma == pytest.approx(2 / 3, abs=1e-10)


def test_shift_examples():
    M = build_mixing(Topology.ring(3), "equal-neighbor")
    S = shift_mixing(M, 1.0)
    assert np.allclose(S.spectrum, [1.0, 0.5, 0.5], atol=1e-10)
    assert np.allclose(S.spectrum, _lapack(S.W), atol=1e-10)
    I = build_mixing(Topology.disconnected(4))
    assert np.array_equal(shift_mixing(I, 3.7).W, np.eye(4))


def test_shift_negative_lambda():
    # 2-node path: W = [[.5,.5],[.5,.5]] has lambda_N = 0; build one with lambda_N = -0.5 directly
    W = np.array([[0.25, 0.75], [0.75, 0.25]])
    M = MixingMatrix.from_matrix(W)
    assert M.lambda_min == pytest.approx(-0.5)
    assert shift_mixing(M, 1.0).lambda_min == pytest.approx(0.25)


def test_assumption3_examples():
    assert not assert_assumption3(build_mixing(Topology.ring(3), "equal-neighbor"))
    assert assert_assumption3(build_mixing(Topology.disconnected(3)))
    assert assert_assumption3(shift_mixing(build_mixing(Topology.ring(6)), 2.0))
    # tau = 1 gives lambda_N >= 0 only; strict positivity can fail at the boundary
    M = MixingMatrix.from_matrix(np.array([[0.0 + 1e-9, 1 - 1e-9], [1 - 1e-9, 1e-9]]))
    assert shift_mixing(M, 1.0).lambda_min >= 0.0


def test_errors():
    with pytest.raises(EmptyGraph):
        Topology.ring(0)
    with pytest.raises(NonRegularGraph):
        build_mixing(Topology.star(4), "equal-neighbor")
    with pytest.raises(NonpositiveTau):
        shift_mixing(build_mixing(Topology.ring(3)), 0.0)
    with pytest.raises(InvalidTopology):
        Topology.grid(2, 3, 5)
    with pytest.raises(InvalidTopology):
        Topology.custom(3, [[0, 5]])
    with pytest.raises(InvalidMixingMatrix):
        MixingMatrix.from_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))     # lambda_N = -1
    with pytest.raises(InvalidMixingMatrix):
        MixingMatrix.from_matrix(np.array([[0.6, 0.5], [0.4, 0.5]]))     # not symmetric


def test_grid_von_neumann():
    T = Topology.grid(2, 3)
    A = T.adjacency()
    assert T.n == 6
    assert A.sum() == 2 * 7       # 2x3 grid has 7 edges
    assert T.is_connected()


def test_components_and_zero_weights():
    T = Topology.custom(4, [[0, 1], [2, 3]])
    M = build_mixing(T)
    assert len(T.components()) == 2
    assert M.W[0, 2] == 0 and M.W[1, 3] == 0
    assert M.gamma == pytest.approx(1.0)


topologies = st.one_of(
    st.integers(1, 12).map(Topology.complete),
    st.integers(1, 12).map(Topology.star),
    st.integers(1, 12).map(Topology.ring),
    st.integers(1, 8).map(Topology.disconnected),
    st.tuples(st.integers(1, 4), st.integers(1, 4)).map(lambda rc: Topology.grid(*rc)),
)


@given(topologies, st.floats(0.05, 5.0))
def test_mixing_invariants(T, tau):
    M = build_mixing(T)
    W = M.W
    assert np.max(np.abs(W - W.T)) <= 1e-12
    assert np.max(np.abs(W.sum(axis=1) - 1.0)) <= 1e-12
    assert np.all(np.diag(W) > 0)
    A = T.adjacency()
    off = ~np.eye(T.n, dtype=bool)
    assert np.array_equal(W[off] > 0, A[off] > 0)
    assert M.spectrum[0] == pytest.approx(1.0, abs=1e-10)
    assert M.lambda_min > -1.0
    assert np.allclose(M.spectrum, _lapack(W), atol=1e-10)
    if T.n > 1:
        assert (M.gamma < 1.0) == T.is_connected()
    S = shift_mixing(M, tau)
    assert np.allclose(S.spectrum, (tau + M.spectrum) / (tau + 1.0), atol=1e-12)
    assert S.lambda_min > (tau - 1.0) / (tau + 1.0) - 1e-12
