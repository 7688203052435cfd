import warnings

import numpy as np
import pytest

from dtpc import bench, control, costs, lti, network, ocp

# One root seed drives every shipped experiment and the heavier fixtures.
BENCH_SEED = 20260808


def quad_row(dims, scale=1.0):
    return tuple(costs.quadratic(scale * np.eye(d)) for d in dims)


def quad_schedule(graph, T, q=1.0, q_f=10.0, r=1.0):
    return costs.CostSchedule(
        state_costs=tuple(quad_row(graph.state_dims, q) for _ in range(T + 1)),
        input_costs=tuple(quad_row(graph.input_dims, r) for _ in range(T)),
        terminal=quad_row(graph.state_dims, q_f),
    )


def make_scalar_system(a=1.0, b=1.0):
    g = network.build_graph([], [1], [1])
    return lti.assemble(g, {(0, 0): [[a]]}, {(0, 0): [[b]]})


def make_chain_system(n_nodes, seed=0, spectral_target=0.8, state_dim=2, input_dim=1):
    rng = np.random.default_rng(seed)
    g = network.build_graph(
        network.path_edges(n_nodes), [state_dim] * n_nodes, [input_dim] * n_nodes
    )
    A_blocks, B_blocks = {}, {}
    for i in range(n_nodes):
        A_blocks[(i, i)] = rng.normal(size=(state_dim, state_dim))
        B_blocks[(i, i)] = rng.normal(size=(state_dim, input_dim))
    for a, b in network.path_edges(n_nodes):
        A_blocks[(a, b)] = 0.4 * rng.normal(size=(state_dim, state_dim))
        A_blocks[(b, a)] = 0.4 * rng.normal(size=(state_dim, state_dim))
    sys0 = lti.assemble(g, A_blocks, B_blocks)
    rho = float(np.max(np.abs(np.linalg.eigvals(sys0.A))))
    if rho > 0:
        A_blocks = {k: spectral_target / rho * np.asarray(v) for k, v in A_blocks.items()}
    return lti.assemble(g, A_blocks, B_blocks)


def random_problem(rng, max_primal=30, terminal="free"):
    """A small random quadratic OCP with total primal dimension capped."""
    while True:
        n_nodes = int(rng.integers(2, 5))
        state_dim = int(rng.integers(1, 3))
        input_dim = state_dim if terminal == "fixed" else int(rng.integers(1, 3))
        ell = int(rng.integers(1, 5))
        n = n_nodes * state_dim
        m = n_nodes * input_dim
        if (ell + 1) * n + ell * m <= max_primal:
            break
    all_edges = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    keep = [e for e in all_edges if rng.random() < 0.6]
    g = network.build_graph(keep, [state_dim] * n_nodes, [input_dim] * n_nodes)
    A_blocks, B_blocks = {}, {}
    for i in range(n_nodes):
        A_blocks[(i, i)] = 0.6 * rng.normal(size=(state_dim, state_dim))
        blk = rng.normal(size=(state_dim, input_dim))
        if terminal == "fixed":
            blk = blk + 2.0 * np.eye(state_dim)  # keep the one-step map invertible
        B_blocks[(i, i)] = blk
    for a, b in keep:
        A_blocks[(a, b)] = 0.3 * rng.normal(size=(state_dim, state_dim))
        A_blocks[(b, a)] = 0.3 * rng.normal(size=(state_dim, state_dim))
    system = lti.assemble(g, A_blocks, B_blocks)

    def pd_row(dims):
        out = []
        for d in dims:
            M = rng.normal(size=(d, d))
            out.append(costs.quadratic(M @ M.T + 0.5 * np.eye(d)))
        return tuple(out)

    with warnings.catch_warnings():
        # random terminal quadratics are anisotropic by construction
        warnings.simplefilter("ignore", UserWarning)
        sched = costs.CostSchedule(
            state_costs=tuple(pd_row(g.state_dims) for _ in range(ell + 1)),
            input_costs=tuple(pd_row(g.input_dims) for _ in range(ell)),
            terminal=pd_row(g.state_dims),
        )
    x0 = rng.normal(size=g.n_states)
    zs = tuple(rng.normal(size=g.n_states) for _ in range(ell))
    if terminal == "fixed":
        term = ocp.FixedTerminal(state=rng.normal(size=g.n_states))
    else:
        term = ocp.FreeTerminal(costs=sched.terminal)
    return ocp.OcpProblem(
        system=system, schedule=sched, start_time=0, horizon=ell,
        init_state=x0, disturbances=zs, terminal=term,
    )


@pytest.fixture(scope="session")
def small_mesh_scenario():
    return bench.build_hvac_mesh(n=3, T=10, seed=BENCH_SEED)


@pytest.fixture(scope="session")
def hvac_benchmark():
    return bench.build_hvac_mesh(n=5, T=30, seed=BENCH_SEED)


@pytest.fixture(scope="session")
def hvac_opt(hvac_benchmark):
    return control.run_opt(hvac_benchmark)


@pytest.fixture(scope="session")
def hvac_pc11(hvac_benchmark):
    return control.run_pc(hvac_benchmark, 11)


@pytest.fixture(scope="session")
def hvac_dtpc_11_2(hvac_benchmark):
    log = control.AccessLog()
    run = control.run_dtpc(hvac_benchmark, 11, 2, log=log)
    return run, log
