import numpy as np
import pytest

from dtpc import costs, lti, ocp
from dtpc.network import build_graph, khop

from .conftest import make_chain_system, make_scalar_system, quad_schedule, random_problem
from .qp_oracle import oracle_solve


def scalar_problem(horizon=1, x=1.0, a=1.0, b=1.0, T=None):
    sys = make_scalar_system(a=a, b=b)
    T = horizon if T is None else T
    sched = quad_schedule(sys.graph, T, q=1.0, q_f=1.0, r=1.0)
    return ocp.OcpProblem(
        system=sys, schedule=sched, start_time=0, horizon=horizon,
        init_state=np.array([x]), disturbances=tuple(np.zeros(1) for _ in range(horizon)),
        terminal=ocp.FreeTerminal(costs=sched.terminal),
    )


class TestBuildKkt:
    def test_scalar_one_step_matrix_by_hand(self):
        # rows (y0, v0, y1 | l0, l1); identity curvature, unit dynamics
        ks = ocp.build_kkt(scalar_problem())
        want = np.array(
            [
                [1.0, 0.0, 0.0, 1.0, -1.0],
                [0.0, 1.0, 0.0, 0.0, -1.0],
                [0.0, 0.0, 1.0, 0.0, 1.0],
                [1.0, 0.0, 0.0, 0.0, 0.0],
                [-1.0, -1.0, 1.0, 0.0, 0.0],
            ]
        )
        assert np.array_equal(ks.H, want)
        assert np.array_equal(ks.b, [0, 0, 0, 1.0, 0])

    def test_constraint_rows_count(self):
        for ell in (1, 2, 4):
            prob = scalar_problem(horizon=ell)
            ks = ocp.build_kkt(prob)
            assert ks.index.n_dual // ks.index.n == ell + 1

    def test_quadratic_curvature_is_point_independent(self):
        prob = scalar_problem(horizon=2)
        nz = ocp.build_kkt(prob).index.n_primal
        h0 = ocp.build_kkt(prob, np.zeros(nz)).H
        h1 = ocp.build_kkt(prob, np.full(nz, 3.7)).H
        assert np.array_equal(h0, h1)

    def test_saddle_structure_and_curvature_bounds(self):
        rng = np.random.default_rng(5)
        prob = random_problem(rng)
        ks = ocp.build_kkt(prob)
        npr = ks.index.n_primal
        assert np.array_equal(ks.H, ks.H.T)
        assert np.all(ks.H[npr:, npr:] == 0)
        rows = [c for row in prob.schedule.state_costs for c in row]
        rows += [c for row in prob.schedule.input_costs for c in row]
        mu = min(c.strong_convexity for c in rows)
        L = max(c.smoothness for c in rows)
        eigs = np.linalg.eigvalsh(ks.H[:npr, :npr])
        assert eigs[0] >= mu - 1e-9
        assert eigs[-1] <= L + 1e-9


class TestSolve:
    def test_scalar_closed_form(self):
        sol = ocp.solve(scalar_problem())
        assert sol.inputs[0][0] == pytest.approx(-0.5, abs=1e-12)
        assert sol.states[1][0] == pytest.approx(0.5, abs=1e-12)

    def test_zero_data_gives_zero_solution(self):
        prob = scalar_problem(horizon=3, x=0.0)
        sol = ocp.solve(prob)
        for y in sol.states:
            assert np.all(y == 0)
        for v in sol.inputs:
            assert np.all(v == 0)

    def test_initial_state_pinned(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            prob = random_problem(rng)
            sol = ocp.solve(prob)
            assert float(np.max(np.abs(sol.states[0] - prob.init_state))) <= 1e-10

    def test_quadratic_residual_tolerance(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            sol = ocp.solve(random_problem(rng))
            assert sol.kkt_residual <= 1e-10
            assert sol.dyn_residual <= 1e-9
            assert sol.newton_iters == 0

    def test_matches_nullspace_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            kind = "fixed" if rng.random() < 0.3 else "free"
            prob = random_problem(rng, terminal=kind)
            sol = ocp.solve(prob)
            o_states, o_inputs, _ = oracle_solve(prob)
            for a, b in zip(sol.states, o_states):
                assert float(np.max(np.abs(a - b))) <= 1e-8
            for a, b in zip(sol.inputs, o_inputs):
                assert float(np.max(np.abs(a - b))) <= 1e-8

    def test_banded_path_matches_dense(self, monkeypatch):
        sys = make_chain_system(6, seed=4)
        sched = quad_schedule(sys.graph, 6)
        rng = np.random.default_rng(6)
        prob = ocp.OcpProblem(
            system=sys, schedule=sched, start_time=0, horizon=6,
            init_state=rng.normal(size=sys.graph.n_states),
            disturbances=tuple(rng.normal(size=sys.graph.n_states) for _ in range(6)),
            terminal=ocp.FreeTerminal(costs=sched.terminal),
        )
        dense = ocp.solve(prob)
        monkeypatch.setattr(ocp, "_BAND_THRESHOLD", 1)
        banded = ocp.solve(prob)
        for a, b in zip(dense.states, banded.states):
            assert float(np.max(np.abs(a - b))) <= 1e-10

    def test_fixed_terminal_reaches_target(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            prob = random_problem(rng, terminal="fixed")
            sol = ocp.solve(prob)
            assert float(np.max(np.abs(sol.states[-1] - prob.terminal.state))) <= 1e-10
            assert len(sol.duals) == prob.horizon + 2

    def test_unreachable_fixed_terminal_is_singular(self):
        g = build_graph([], [1], [1])
        sys = lti.assemble(g, {(0, 0): [[1.0]]}, {(0, 0): [[0.0]]})
        sched = quad_schedule(g, 2)
        prob = ocp.OcpProblem(
            system=sys, schedule=sched, start_time=0, horizon=2,
            init_state=np.array([1.0]),
            disturbances=(np.zeros(1), np.zeros(1)),
            terminal=ocp.FixedTerminal(state=np.array([5.0])),
        )
        with pytest.raises(ocp.SingularKktError):
            ocp.solve(prob)

    def test_mixed_block_dimensions_and_inputless_nodes(self, monkeypatch):
        # uneven per-node dims, one node without any input
        g = build_graph([(0, 1), (1, 2)], [2, 1, 2], [1, 0, 2])
        rng = np.random.default_rng(0)
        A_blocks, B_blocks = {}, {}
        for i in range(3):
            d = g.state_dims[i]
            A_blocks[(i, i)] = 0.5 * rng.normal(size=(d, d))
            if g.input_dims[i]:
                B_blocks[(i, i)] = rng.normal(size=(d, g.input_dims[i]))
        for a, b in ((0, 1), (1, 2)):
            A_blocks[(a, b)] = 0.2 * rng.normal(size=(g.state_dims[a], g.state_dims[b]))
            A_blocks[(b, a)] = 0.2 * rng.normal(size=(g.state_dims[b], g.state_dims[a]))
        sys_m = lti.assemble(g, A_blocks, B_blocks)
        sched = quad_schedule(g, 5)
        x0 = rng.normal(size=g.n_states)
        zs = tuple(rng.normal(size=g.n_states) for _ in range(5))
        prob = ocp.OcpProblem(
            system=sys_m, schedule=sched, start_time=0, horizon=5,
            init_state=x0, disturbances=zs,
            terminal=ocp.FreeTerminal(costs=sched.terminal),
        )
        dense = ocp.solve(prob)
        monkeypatch.setattr(ocp, "_BAND_THRESHOLD", 1)
        banded = ocp.solve(prob)
        for a, b in zip(dense.states, banded.states):
            assert float(np.max(np.abs(a - b))) <= 1e-10
        red = ocp.solve_truncated(prob, khop(g, 1, 1))  # centred on the inputless node
        assert red.dyn_residual <= 1e-9

    def test_newton_on_logcosh_costs(self):
        sys = make_chain_system(3, seed=8)
        g = sys.graph
        T = 4
        state_rows = tuple(
            tuple(costs.quad_logcosh(np.eye(d), 0.8) for d in g.state_dims)
            for _ in range(T + 1)
        )
        sched = costs.CostSchedule(
            state_costs=state_rows,
            input_costs=tuple(
                tuple(costs.quadratic(np.eye(d)) for d in g.input_dims) for _ in range(T)
            ),
            terminal=tuple(costs.quadratic(10 * np.eye(d)) for d in g.state_dims),
        )
        rng = np.random.default_rng(9)
        prob = ocp.OcpProblem(
            system=sys, schedule=sched, start_time=0, horizon=T,
            init_state=rng.normal(size=g.n_states),
            disturbances=tuple(rng.normal(size=g.n_states) for _ in range(T)),
            terminal=ocp.FreeTerminal(costs=sched.terminal),
        )
        sol = ocp.solve(prob)
        assert sol.newton_iters >= 1
        assert sol.kkt_residual <= 1e-9
        assert sol.dyn_residual <= 1e-9

    def test_bad_problem_shapes(self):
        with pytest.raises(ValueError, match="horizon"):
            scalar_problem(horizon=0)
        sys = make_scalar_system()
        sched = quad_schedule(sys.graph, 2)
        with pytest.raises(ValueError, match="disturbances"):
            ocp.OcpProblem(
                system=sys, schedule=sched, start_time=0, horizon=2,
                init_state=np.zeros(1), disturbances=(np.zeros(1),),
                terminal=ocp.FreeTerminal(costs=sched.terminal),
            )
        with pytest.raises(ValueError, match="exceeds"):
            ocp.OcpProblem(
                system=sys, schedule=sched, start_time=1, horizon=2,
                init_state=np.zeros(1), disturbances=(np.zeros(1), np.zeros(1)),
                terminal=ocp.FreeTerminal(costs=sched.terminal),
            )


class TestSolveTruncated:
    def _chain_problem(self, n_nodes=3, horizon=2, seed=10):
        sys = make_chain_system(n_nodes, seed=seed)
        sched = quad_schedule(sys.graph, horizon)
        rng = np.random.default_rng(seed + 1)
        return ocp.OcpProblem(
            system=sys, schedule=sched, start_time=0, horizon=horizon,
            init_state=rng.normal(size=sys.graph.n_states),
            disturbances=tuple(rng.normal(size=sys.graph.n_states) for _ in range(horizon)),
            terminal=ocp.FreeTerminal(costs=sched.terminal),
        )

    def test_identity_at_diameter(self):
        prob = self._chain_problem()
        full = ocp.solve(prob)
        ts = khop(prob.system.graph, 1, 2)
        red = ocp.solve_truncated(prob, ts)
        for a, b in zip(full.states, red.states):
            assert float(np.max(np.abs(a - b))) <= 1e-8

    def test_decoupled_graph_any_radius(self):
        g = build_graph([], [1, 1, 1], [1, 1, 1])
        sys = lti.assemble(
            g,
            {(i, i): [[0.7]] for i in range(3)},
            {(i, i): [[1.0]] for i in range(3)},
        )
        sched = quad_schedule(g, 2)
        rng = np.random.default_rng(12)
        prob = ocp.OcpProblem(
            system=sys, schedule=sched, start_time=0, horizon=2,
            init_state=rng.normal(size=3),
            disturbances=tuple(rng.normal(size=3) for _ in range(2)),
            terminal=ocp.FreeTerminal(costs=sched.terminal),
        )
        full = ocp.solve(prob)
        for i in range(3):
            red = ocp.solve_truncated(prob, khop(g, i, 0))
            assert red.first_input(i)[0] == pytest.approx(full.inputs[0][i], abs=1e-10)

    def test_middle_node_gap_shrinks_with_radius(self):
        prob = self._chain_problem(n_nodes=3)
        full = ocp.solve(prob)
        dims = (prob.system.graph.state_dims[1], prob.system.graph.input_dims[1])
        q_full = full.node_stack(1, dims)
        gaps = []
        for kappa in (0, 1, 2):
            red = ocp.solve_truncated(prob, khop(prob.system.graph, 1, kappa))
            gaps.append(float(np.linalg.norm(q_full - red.node_stack(1, dims))))
        assert gaps[1] < gaps[0]
        assert gaps[2] <= 1e-8

    def test_rejects_already_truncated(self):
        prob = self._chain_problem()
        ts = khop(prob.system.graph, 0, 1)
        red_prob = ocp.OcpProblem(
            system=prob.system, schedule=prob.schedule, start_time=0,
            horizon=prob.horizon,
            init_state=np.zeros(4), disturbances=tuple(np.zeros(4) for _ in range(2)),
            terminal=prob.terminal, support=ts,
        )
        with pytest.raises(ValueError, match="already truncated"):
            ocp.solve_truncated(red_prob, ts)


class TestPrincipleOfOptimality:
    def test_scalar_two_step(self):
        prob = scalar_problem(horizon=2)
        sol = ocp.solve(prob)
        assert ocp.popt_check(sol, prob) <= 1e-10

    def test_zero_data(self):
        prob = scalar_problem(horizon=3, x=0.0)
        sol = ocp.solve(prob)
        assert ocp.popt_check(sol, prob) == 0.0

    def test_random_instances(self):
        rng = np.random.default_rng(13)
        done = 0
        while done < 10:
            prob = random_problem(rng)
            if prob.horizon < 2:
                continue
            sol = ocp.solve(prob)
            assert ocp.popt_check(sol, prob) <= 1e-7
            done += 1

    def test_truncated_problems_too(self):
        import dataclasses

        from dtpc.network import node_indices

        rng = np.random.default_rng(15)
        done = 0
        while done < 8:
            prob = random_problem(rng)
            if prob.horizon < 2:
                continue
            g = prob.system.graph
            ts = khop(g, int(rng.integers(g.node_count)), int(rng.integers(0, 3)))
            idx = node_indices(ts.state_nodes, g.state_offsets)
            reduced = dataclasses.replace(
                prob,
                init_state=np.asarray(prob.init_state)[idx],
                disturbances=tuple(np.asarray(z)[idx] for z in prob.disturbances),
                support=ts,
            )
            sol = ocp.solve(reduced)
            assert ocp.popt_check(sol, reduced) <= 1e-7
            done += 1

    def test_needs_two_steps(self):
        prob = scalar_problem(horizon=1)
        sol = ocp.solve(prob)
        with pytest.raises(ValueError, match="horizon"):
            ocp.popt_check(sol, prob)

    def test_fixed_terminal_rejected(self):
        rng = np.random.default_rng(14)
        prob = random_problem(rng, terminal="fixed")
        sol = ocp.solve(prob)
        with pytest.raises(ValueError, match="free-terminal"):
            ocp.popt_check(sol, prob)
