import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtpc.lti import (
    DisturbanceSeq,
    assemble,
    controllability_index,
    input_pinv_norm,
    load_system,
    rollout,
    save_system,
    stabilizability_probe,
    step,
)
from dtpc.network import build_graph, khop, node_indices, path_edges

from .conftest import make_chain_system, make_scalar_system


class TestAssemble:
    def test_hvac_mesh_dimensions(self):
        from dtpc.bench import build_hvac_mesh

        scen = build_hvac_mesh(n=5, T=2, seed=0)
        assert scen.system.graph.n_states == 50
        assert scen.system.graph.n_inputs == 25

    def test_diagonal_only_blocks(self):
        g = build_graph(path_edges(3), [1] * 3, [1] * 3)
        sys = assemble(g, {(i, i): [[0.5]] for i in range(3)}, {(i, i): [[1.0]] for i in range(3)})
        assert np.allclose(np.diag(sys.A), 0.5)

    def test_block_for_distant_pair_rejected(self):
        g = build_graph(path_edges(3), [1] * 3, [1] * 3)
        with pytest.raises(ValueError, match="non-adjacent"):
            assemble(g, {(0, 2): [[1.0]]}, {})

    def test_shape_mismatch_rejected(self):
        g = build_graph(path_edges(2), [2, 1], [1, 1])
        with pytest.raises(ValueError, match="shape"):
            assemble(g, {(0, 0): np.eye(3)}, {})

    def test_graph_support_invariant(self):
        sys = make_chain_system(5, seed=3)
        g = sys.graph
        for i in range(5):
            for j in range(5):
                if g.distance(i, j) > 1:
                    assert np.all(sys.a_block(i, j) == 0)
                    assert np.all(sys.b_block(i, j) == 0)


class TestStep:
    def test_zero_everything(self):
        sys = make_scalar_system()
        assert step(sys, np.zeros(1), np.zeros(1), np.zeros(1)) == 0

    def test_scalar_arithmetic(self):
        sys = make_scalar_system(a=1.0, b=1.0)
        out = step(sys, np.array([2.0]), np.array([3.0]), np.array([1.0]))
        assert out[0] == 6.0

    def test_blockwise_matches_dense_product(self):
        sys = make_chain_system(6, seed=1)
        rng = np.random.default_rng(2)
        x = rng.normal(size=sys.graph.n_states)
        u = rng.normal(size=sys.graph.n_inputs)
        w = rng.normal(size=sys.graph.n_states)
        dense = sys.A @ x + sys.B @ u + w
        assert np.allclose(step(sys, x, u, w), dense, atol=1e-12)

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_linearity(self, seed):
        sys = make_chain_system(4, seed=7)
        rng = np.random.default_rng(seed)
        n, m = sys.graph.n_states, sys.graph.n_inputs
        x1, x2 = rng.normal(size=n), rng.normal(size=n)
        u1, u2 = rng.normal(size=m), rng.normal(size=m)
        w1, w2 = rng.normal(size=n), rng.normal(size=n)
        lhs = step(sys, x1 + x2, u1 + u2, w1 + w2)
        rhs = step(sys, x1, u1, w1) + step(sys, x2, u2, w2)
        assert np.allclose(lhs, rhs, atol=1e-10)

    def test_dimension_mismatch(self):
        sys = make_scalar_system()
        with pytest.raises(ValueError, match="dimension mismatch"):
            step(sys, np.zeros(2), np.zeros(1), np.zeros(1))

    def test_truncation_consistency(self):
        # restricted step agrees with the full step when the state and input
        # vanish outside the kept set
        sys = make_chain_system(6, seed=5)
        g = sys.graph
        ts = khop(g, 2, 1)
        rng = np.random.default_rng(8)
        s_idx = node_indices(ts.state_nodes, g.state_offsets)
        i_idx = node_indices(ts.input_nodes, g.input_offsets)
        x = np.zeros(g.n_states)
        u = np.zeros(g.n_inputs)
        x[s_idx] = rng.normal(size=s_idx.size)
        u[i_idx] = rng.normal(size=i_idx.size)
        full = step(sys, x, u, np.zeros(g.n_states))
        A_red = sys.A[np.ix_(s_idx, s_idx)]
        B_red = sys.B[np.ix_(s_idx, i_idx)]
        reduced = A_red @ x[s_idx] + B_red @ u[i_idx]
        assert np.allclose(full[s_idx], reduced, atol=1e-12)


class TestRollout:
    def test_empty_horizon(self):
        sys = make_scalar_system()
        traj = rollout(sys, np.array([3.0]), [], [])
        assert len(traj) == 1 and traj[0][0] == 3.0

    def test_nilpotent_dies_out(self):
        g = build_graph([], [2], [1])
        sys = assemble(g, {(0, 0): [[0.0, 1.0], [0.0, 0.0]]}, {(0, 0): [[0.0], [0.0]]})
        traj = rollout(sys, np.array([1.0, 1.0]),
                       [np.zeros(1)] * 4, [np.zeros(2)] * 4)
        assert np.all(traj[2] == 0) and np.all(traj[4] == 0)

    @given(st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_matches_repeated_step(self, seed):
        sys = make_chain_system(3, seed=11)
        rng = np.random.default_rng(seed)
        n, m = sys.graph.n_states, sys.graph.n_inputs
        x0 = rng.normal(size=n)
        us = [rng.normal(size=m) for _ in range(5)]
        ws = [rng.normal(size=n) for _ in range(5)]
        traj = rollout(sys, x0, us, ws)
        x = x0
        for t in range(5):
            x = step(sys, x, us[t], ws[t])
            assert np.array_equal(traj[t + 1], x)

    def test_length_mismatch(self):
        sys = make_scalar_system()
        with pytest.raises(ValueError, match="inputs vs"):
            rollout(sys, np.zeros(1), [np.zeros(1)], [])


class TestControllability:
    def test_identity_actuation(self):
        g = build_graph([], [2], [2])
        sys = assemble(g, {(0, 0): np.zeros((2, 2))}, {(0, 0): np.eye(2)})
        res = controllability_index(sys)
        assert res.found and res.index == 1
        assert res.sigma_min == pytest.approx(1.0)

    def test_no_actuation(self):
        g = build_graph([], [2], [1])
        sys = assemble(g, {(0, 0): np.eye(2)}, {(0, 0): np.zeros((2, 1))})
        res = controllability_index(sys)
        assert not res.found and res.index is None

    def test_double_integrator(self):
        g = build_graph([], [2], [1])
        sys = assemble(g, {(0, 0): [[1.0, 1.0], [0.0, 1.0]]}, {(0, 0): [[0.0], [1.0]]})
        res = controllability_index(sys)
        assert res.index == 2

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            controllability_index(make_scalar_system(), sigma_threshold=0.0)


class TestStabilizability:
    def test_already_stable_without_actuation(self):
        sys = make_scalar_system(a=0.5, b=0.0)
        probe = stabilizability_probe(sys, horizon=12)
        assert probe.stabilizable
        assert probe.gamma == pytest.approx(0.5, rel=1e-9)

    def test_identity_pair_closes_stable(self):
        g = build_graph([], [2], [2])
        sys = assemble(g, {(0, 0): np.eye(2)}, {(0, 0): np.eye(2)})
        probe = stabilizability_probe(sys, horizon=10)
        assert probe.stabilizable and probe.gamma < 1.0
        # Riccati fixed point for the scalar identity pair: closed loop (3-sqrt(5))/2
        assert probe.gamma == pytest.approx((3.0 - np.sqrt(5.0)) / 2.0, rel=1e-6)

    def test_unstabilizable_scalar(self):
        sys = make_scalar_system(a=2.0, b=0.0)
        probe = stabilizability_probe(sys, horizon=10)
        assert not probe.stabilizable
        assert not probe.riccati_converged

    def test_horizon_too_short(self):
        with pytest.raises(ValueError):
            stabilizability_probe(make_scalar_system(), horizon=1)


def test_input_pinv_norm_diagnostic():
    sys = make_scalar_system(a=1.0, b=2.0)
    assert input_pinv_norm(sys) == pytest.approx(0.5)


def test_disturbance_window_bounds_and_logging():
    vals = tuple(np.array([float(t)]) for t in range(5))
    seq = DisturbanceSeq(values=vals)
    assert [w[0] for w in seq.window(1, 3)] == [1.0, 2.0, 3.0]
    with pytest.raises(IndexError):
        seq.window(3, 3)

    class Probe:
        def __init__(self):
            self.reads = []

        def note_disturbance_read(self, t, idx):
            self.reads.append((t, idx))

    probe = Probe()
    seq.window(2, 2, probe)
    assert probe.reads == [(2, 2), (2, 3)]


def test_system_serialization_roundtrip(tmp_path):
    sys = make_chain_system(4, seed=9)
    path = tmp_path / "system.txt"
    save_system(path, sys)
    back = load_system(path)
    assert np.allclose(back.A, sys.A)
    assert np.allclose(back.B, sys.B)
    assert back.graph.edges == sys.graph.edges
