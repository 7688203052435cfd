"""Closed-loop controllers: offline optimal, receding-horizon, and the
hop-truncated decentralized variants (with and without forecast error).

Every controller steps the true plant with the true disturbance; they differ
only in what each decision sees.  The centralized receding-horizon loop
solves a lookahead problem each step and applies the first input, committing
the whole tail once the remaining horizon fits in the window.  The
decentralized loop solves one truncated problem per agent every step and
always applies first inputs only.  Instrumentation hooks record which
disturbance indices and which node blocks each decision read.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import costs as _costs
from . import ocp as _ocp
from .forecast import ForecastLog, ForecastModel, ParamTrajectory, forecast_window
from .lti import DisturbanceSeq, NetworkedSystem, step
from .network import khop

REGRET_SLACK = 1e-8


class ControllerError(RuntimeError):
    """A per-step solve failed; message carries the step (and agent) index."""


class InfeasibleTargetError(RuntimeError):
    """Requested next state is not reachable through the input matrix."""


@dataclass
class AccessLog:
    """What a controller run actually read, for causality and locality checks."""

    disturbance_reads: list[tuple[int, int]] = field(default_factory=list)
    local_reads: list[tuple[int, int, str, tuple[int, ...]]] = field(default_factory=list)

    def note_disturbance_read(self, decision_time: int, index: int) -> None:
        self.disturbance_reads.append((decision_time, index))

    def note_local_read(self, decision_time: int, center: int, kind: str,
                        nodes: tuple[int, ...]) -> None:
        self.local_reads.append((decision_time, center, kind, tuple(nodes)))


@dataclass(frozen=True)
class Scenario:
    """One closed-loop experiment: plant, cost schedule, horizon, start state,
    realized disturbances, and the seed everything derived from."""

    system: NetworkedSystem
    schedule: _costs.CostSchedule
    horizon: int
    x0: np.ndarray
    disturbances: DisturbanceSeq
    rng_seed: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.schedule.horizon != self.horizon:
            raise ValueError(
                f"schedule horizon {self.schedule.horizon} != scenario horizon {self.horizon}"
            )
        if len(self.disturbances) != self.horizon:
            raise ValueError(
                f"{len(self.disturbances)} disturbances for horizon {self.horizon}"
            )
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (self.system.graph.n_states,):
            raise ValueError("x0 dimension mismatch")
        object.__setattr__(self, "x0", x0)
        x0.setflags(write=False)


@dataclass(frozen=True)
class StepStats:
    t: int
    max_residual: float
    newton_iters: int
    solves: int


@dataclass(frozen=True)
class RunRecord:
    """Full closed-loop trace of one controller run."""

    controller_tag: str
    states: tuple[np.ndarray, ...]
    inputs: tuple[np.ndarray, ...]
    state_cost_series: tuple[float, ...]
    input_cost_series: tuple[float, ...]
    total_cost: float
    solver_stats: tuple[StepStats, ...]
    rng_seed: int

    @property
    def horizon(self) -> int:
        return len(self.inputs)


def _finish(scenario: Scenario, tag: str, states, inputs, stats) -> RunRecord:
    g = scenario.system.graph
    f_series = tuple(
        _costs.grid_value(scenario.schedule.state_costs[t], states[t], g.state_offsets)
        for t in range(scenario.horizon + 1)
    )
    c_series = tuple(
        _costs.grid_value(scenario.schedule.input_costs[t], inputs[t], g.input_offsets)
        for t in range(scenario.horizon)
    )
    return RunRecord(
        controller_tag=tag,
        states=tuple(states),
        inputs=tuple(inputs),
        state_cost_series=f_series,
        input_cost_series=c_series,
        total_cost=float(sum(f_series) + sum(c_series)),
        solver_stats=tuple(stats),
        rng_seed=scenario.rng_seed,
    )


def run_opt(scenario: Scenario, log: AccessLog | None = None) -> RunRecord:
    """Offline optimum: one solve over the whole horizon with the final stage
    cost closing the objective."""
    T = scenario.horizon
    w = scenario.disturbances.window(0, T, log)
    problem = _ocp.OcpProblem(
        system=scenario.system,
        schedule=scenario.schedule,
        start_time=0,
        horizon=T,
        init_state=scenario.x0,
        disturbances=tuple(w),
        terminal=_ocp.FreeTerminal(costs=scenario.schedule.state_costs[T]),
    )
    try:
        sol = _ocp.solve(problem)
    except _ocp.SolverError as exc:
        raise ControllerError(f"offline solve failed: {exc}") from exc
    stats = [StepStats(0, sol.kkt_residual, sol.newton_iters, 1)]
    states = [scenario.x0.copy(), *sol.states[1:]]  # the start state is known exactly
    return _finish(scenario, "opt", states, list(sol.inputs), stats)


def run_pc(scenario: Scenario, k: int, log: AccessLog | None = None) -> RunRecord:
    """Centralized receding horizon with window k: apply the first input each
    step until the remaining horizon fits the window, then commit the tail."""
    T = scenario.horizon
    if not 1 <= k <= T:
        raise ValueError(f"window k={k} outside 1..{T}")
    sched = scenario.schedule
    x = scenario.x0.copy()
    states = [x.copy()]
    inputs: list[np.ndarray] = []
    stats: list[StepStats] = []
    for t in range(T - k):
        w = scenario.disturbances.window(t, k, log)
        problem = _ocp.OcpProblem(
            system=scenario.system, schedule=sched, start_time=t, horizon=k,
            init_state=x, disturbances=tuple(w),
            terminal=_ocp.FreeTerminal(costs=sched.terminal),
        )
        try:
            sol = _ocp.solve(problem)
        except _ocp.SolverError as exc:
            raise ControllerError(f"step {t}: {exc}") from exc
        u = sol.inputs[0].copy()
        inputs.append(u)
        x = step(scenario.system, x, u, scenario.disturbances.values[t])
        states.append(x.copy())
        stats.append(StepStats(t, sol.kkt_residual, sol.newton_iters, 1))

    t = T - k
    w = scenario.disturbances.window(t, k, log)
    problem = _ocp.OcpProblem(
        system=scenario.system, schedule=sched, start_time=t, horizon=k,
        init_state=x, disturbances=tuple(w),
        terminal=_ocp.FreeTerminal(costs=sched.state_costs[T]),
    )
    try:
        sol = _ocp.solve(problem)
    except _ocp.SolverError as exc:
        raise ControllerError(f"step {t}: {exc}") from exc
    stats.append(StepStats(t, sol.kkt_residual, sol.newton_iters, 1))
    for tau in range(k):
        u = sol.inputs[tau].copy()
        inputs.append(u)
        x = step(scenario.system, x, u, scenario.disturbances.values[t + tau])
        states.append(x.copy())
    return _finish(scenario, f"pc_k{k}", states, inputs, stats)


def _agent_groups(scenario: Scenario, kappa: int):
    """Agents whose truncation sets keep identical blocks share one solve."""
    g = scenario.system.graph
    groups: dict[tuple, tuple] = {}
    for i in range(g.node_count):
        ts = khop(g, i, kappa)
        key = ts.support_key()
        if key in groups:
            groups[key][1].append(i)
        else:
            groups[key] = (ts, [i])
    return list(groups.values())


def _decentralized_run(
    scenario: Scenario,
    k: int,
    kappa: int,
    tag: str,
    window_fn,
    log: AccessLog | None,
    workers: int,
) -> RunRecord:
    T = scenario.horizon
    if not 1 <= k <= T:
        raise ValueError(f"window k={k} outside 1..{T}")
    if kappa < 0:
        raise ValueError("truncation radius must be non-negative")
    g = scenario.system.graph
    sched = scenario.schedule
    groups = _agent_groups(scenario, kappa)
    x = scenario.x0.copy()
    states = [x.copy()]
    inputs: list[np.ndarray] = []
    stats: list[StepStats] = []

    for t in range(T):
        h = k if t < T - k else T - t
        grid = sched.terminal if t < T - k else sched.state_costs[T]
        w = window_fn(t, h)
        problem = _ocp.OcpProblem(
            system=scenario.system, schedule=sched, start_time=t, horizon=h,
            init_state=x, disturbances=tuple(w),
            terminal=_ocp.FreeTerminal(costs=grid),
        )

        def solve_group(entry):
            ts, agents = entry
            try:
                return _ocp.solve_truncated(problem, ts, log)
            except _ocp.SolverError as exc:
                raise ControllerError(f"step {t}, agent {agents[0]}: {exc}") from exc

        if workers > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                sols = list(pool.map(solve_group, groups))
        else:
            sols = [solve_group(entry) for entry in groups]

        u = np.zeros(g.n_inputs)
        for (ts, agents), sol in zip(groups, sols):
            for i in agents:
                if g.input_dims[i]:
                    u[g.input_slice(i)] = sol.first_input(i)
        inputs.append(u)
        x = step(scenario.system, x, u, scenario.disturbances.values[t])
        states.append(x.copy())
        stats.append(StepStats(
            t,
            max(s.kkt_residual for s in sols),
            sum(s.newton_iters for s in sols),
            len(sols),
        ))
    return _finish(scenario, tag, states, inputs, stats)


def run_dtpc(
    scenario: Scenario,
    k: int,
    kappa: int,
    log: AccessLog | None = None,
    workers: int = 1,
) -> RunRecord:
    """Decentralized truncated receding horizon: every step, each agent solves
    its hop-limited problem and contributes its own first input."""

    def window(t, h):
        return scenario.disturbances.window(t, h, log)

    return _decentralized_run(
        scenario, k, kappa, f"dtpc_k{k}_kappa{kappa}", window, log, workers
    )


def run_udtpc(
    scenario: Scenario,
    k: int,
    kappa: int,
    forecast_model: ForecastModel,
    log: AccessLog | None = None,
    flog: ForecastLog | None = None,
    workers: int = 1,
) -> RunRecord:
    """Same loop as the decentralized controller, but decisions see forecast
    disturbances; the plant still evolves with the truth."""
    theta = ParamTrajectory(values=tuple(scenario.disturbances.values))

    def window(t, h):
        if log is not None:
            for n in range(h):
                log.note_disturbance_read(t, t + n)
        return forecast_window(theta, forecast_model, t, h, flog)

    tag = f"udtpc_k{k}_kappa{kappa}_{forecast_model.kind}"
    return _decentralized_run(scenario, k, kappa, tag, window, log, workers)


def regret(run: RunRecord, opt_run: RunRecord) -> float:
    """Cost excess over the offline optimum on the same realized scenario."""
    if (
        run.rng_seed != opt_run.rng_seed
        or run.horizon != opt_run.horizon
        or run.states[0].shape != opt_run.states[0].shape
        or not np.array_equal(run.states[0], opt_run.states[0])
    ):
        raise ValueError("runs come from different scenarios")
    value = run.total_cost - opt_run.total_cost
    if value < -REGRET_SLACK:
        warnings.warn(
            f"regret {value:.3e} below the numerical slack; check the baseline",
            stacklevel=2,
        )
    return value


def one_step_terminal(
    system: NetworkedSystem,
    x_t: np.ndarray,
    x_next: np.ndarray,
    w_t: np.ndarray,
    input_costs_row,
) -> np.ndarray:
    """Cheapest input moving the state to an exact target in one step.

    The displacement must lie in the input matrix's column space; the
    row-space component is the pseudo-inverse solution and any null-space
    freedom is fixed by Newton on the reduced unconstrained cost.
    """
    B = system.B
    rhs = np.asarray(x_next, dtype=float) - system.A @ np.asarray(x_t, dtype=float) - w_t
    v_y, *_ = np.linalg.lstsq(B, rhs, rcond=None)
    gap = float(np.linalg.norm(B @ v_y - rhs))
    if gap > 1e-8 * max(1.0, float(np.linalg.norm(rhs))):
        raise InfeasibleTargetError(
            f"target misses the input column space by {gap:.3e}"
        )
    Bz = scipy.linalg.null_space(B)
    if Bz.shape[1] == 0:
        return v_y
    offsets = system.graph.input_offsets
    omega = np.zeros(Bz.shape[1])
    for _ in range(50):
        v = v_y + Bz @ omega
        grad = Bz.T @ _costs.grid_grad(input_costs_row, v, offsets)
        if float(np.linalg.norm(grad)) <= 1e-10:
            break
        hess = Bz.T @ _costs.grid_hessian(input_costs_row, v, offsets) @ Bz
        omega = omega - np.linalg.solve(hess, grad)
    return v_y + Bz @ omega
