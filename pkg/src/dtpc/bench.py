"""Benchmark scenarios, experiment orchestration, and CSV emission.

The flagship scenario is a building-temperature mesh: each zone carries a
temperature and its integrator, zones exchange heat with grid neighbours
through a weighted Laplacian, and each zone injects heat through one input.
Configs are flat key-value text with two sections; a single root seed drives
every random quantity through labeled streams, so a rerun of any config
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import control as _control
from . import costs as _costs
from . import decay as _decay
from . import rng as _rng
from .forecast import ForecastModel, ParamTrajectory
from .lti import DisturbanceSeq, NetworkedSystem, assemble, load_system
from .network import build_graph, load_graph, mesh_edges, path_edges


@dataclass(frozen=True)
class ControllerSpec:
    kind: str  # opt | pc | dtpc | udtpc
    k: int | None = None
    kappa: int | None = None
    forecast: ForecastModel | None = None

    def tag(self) -> str:
        if self.kind == "opt":
            return "opt"
        if self.kind == "pc":
            return f"pc_k{self.k}"
        if self.kind == "dtpc":
            return f"dtpc_k{self.k}_kappa{self.kappa}"
        return f"udtpc_k{self.k}_kappa{self.kappa}_{self.forecast.kind}"


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed experiment description; see ``parse_config`` for the text form."""

    graph_spec: str = "mesh 5"
    system_spec: str = "hvac"
    t_s: float = 1.0
    coupling: float = 0.05
    q: str = "1.0"
    q_f: str = "10.0"
    r_mode: str = "random"
    noise_var: float = 25.0
    T: int = 30
    x0_spec: str = "zero"
    disturbance_spec: str = "gaussian"
    seed: int = 0
    out_dir: str = "out"
    controllers: tuple[ControllerSpec, ...] = ()


def parse_config(text: str) -> ScenarioConfig:
    """Read the flat two-section config format.

    ``[scenario]`` holds ``key = value`` lines; ``[controllers]`` holds one
    controller per line, e.g. ``dtpc k=11 kappa=2`` or
    ``udtpc k=10 kappa=3 forecast=const_exp R=2.0 rate=2.0``.
    """
    fields: dict[str, str] = {}
    controllers: list[ControllerSpec] = []
    section = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("scenario", "controllers"):
                raise ValueError(f"unknown section [{section}]")
            continue
        if section == "scenario":
            if "=" not in line:
                raise ValueError(f"expected 'key = value', got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            fields[key] = val
        elif section == "controllers":
            controllers.append(_parse_controller(line))
        else:
            raise ValueError(f"line outside any section: {line!r}")

    cfg = ScenarioConfig(controllers=tuple(controllers))
    casts = {
        "graph": ("graph_spec", str),
        "system": ("system_spec", str),
        "t_s": ("t_s", float),
        "coupling": ("coupling", float),
        "q": ("q", str),
        "q_f": ("q_f", str),
        "r_mode": ("r_mode", str),
        "noise_var": ("noise_var", float),
        "T": ("T", int),
        "x0": ("x0_spec", str),
        "disturbances": ("disturbance_spec", str),
        "seed": ("seed", int),
        "out_dir": ("out_dir", str),
    }
    updates = {}
    for key, val in fields.items():
        if key not in casts:
            raise ValueError(f"unknown config key {key!r}")
        attr, cast = casts[key]
        updates[attr] = cast(val)
    cfg = replace(cfg, **updates)
    _validate_config(cfg)
    return cfg


def _parse_controller(line: str) -> ControllerSpec:
    toks = line.split()
    kind = toks[0].lower()
    if kind not in ("opt", "pc", "dtpc", "udtpc"):
        raise ValueError(f"unknown controller {kind!r}")
    opts: dict[str, str] = {}
    for tok in toks[1:]:
        if "=" not in tok:
            raise ValueError(f"controller option {tok!r} is not key=value")
        key, val = tok.split("=", 1)
        opts[key] = val
    k = int(opts.pop("k")) if "k" in opts else None
    kappa = int(opts.pop("kappa")) if "kappa" in opts else None
    forecast = None
    if kind == "udtpc":
        forecast = ForecastModel(
            kind=opts.pop("forecast"),
            R=float(opts.pop("R", "0.0")),
            rate=float(opts.pop("rate", "1.0")),
            rng_seed=int(opts.pop("fseed", "0")),
        )
    if opts:
        raise ValueError(f"unexpected controller options {sorted(opts)}")
    if kind in ("pc", "dtpc", "udtpc") and k is None:
        raise ValueError(f"{kind} needs k=")
    if kind in ("dtpc", "udtpc") and kappa is None:
        raise ValueError(f"{kind} needs kappa=")
    return ControllerSpec(kind=kind, k=k, kappa=kappa, forecast=forecast)


def _validate_config(cfg: ScenarioConfig) -> None:
    if cfg.T < 1:
        raise ValueError("T must be positive")
    for spec in (cfg.graph_spec, cfg.system_spec, cfg.x0_spec, cfg.disturbance_spec):
        toks = spec.split()
        if toks and toks[0] == "file" and not os.path.exists(toks[1]):
            raise ValueError(f"referenced file does not exist: {toks[1]}")
    for ctrl in cfg.controllers:
        if ctrl.k is not None and not 1 <= ctrl.k <= cfg.T:
            raise ValueError(f"controller k={ctrl.k} outside 1..{cfg.T}")
        if ctrl.kappa is not None and ctrl.kappa < 0:
            raise ValueError("controller kappa must be non-negative")


def format_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; parse(format(parse(s))) == parse(s)."""
    lines = ["[scenario]"]
    lines.append(f"graph = {cfg.graph_spec}")
    lines.append(f"system = {cfg.system_spec}")
    lines.append(f"t_s = {cfg.t_s!r}")
    lines.append(f"coupling = {cfg.coupling!r}")
    lines.append(f"q = {cfg.q}")
    lines.append(f"q_f = {cfg.q_f}")
    lines.append(f"r_mode = {cfg.r_mode}")
    lines.append(f"noise_var = {cfg.noise_var!r}")
    lines.append(f"T = {cfg.T}")
    lines.append(f"x0 = {cfg.x0_spec}")
    lines.append(f"disturbances = {cfg.disturbance_spec}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"out_dir = {cfg.out_dir}")
    lines.append("")
    lines.append("[controllers]")
    for ctrl in cfg.controllers:
        parts = [ctrl.kind]
        if ctrl.k is not None:
            parts.append(f"k={ctrl.k}")
        if ctrl.kappa is not None:
            parts.append(f"kappa={ctrl.kappa}")
        if ctrl.forecast is not None:
            parts.append(f"forecast={ctrl.forecast.kind}")
            parts.append(f"R={ctrl.forecast.R!r}")
            parts.append(f"rate={ctrl.forecast.rate!r}")
            parts.append(f"fseed={ctrl.forecast.rng_seed}")
        lines.append(" ".join(parts))
    lines.append("")
    return "\n".join(lines)


# --- scenario construction --------------------------------------------------


def build_hvac_mesh(
    n: int = 5,
    t_s: float = 1.0,
    k_coupling: float = 0.05,
    q: float | str = 1.0,
    q_f: float | str = 10.0,
    noise_var: float = 25.0,
    seed: int = 0,
    T: int = 30,
    x0: np.ndarray | None = None,
    r_mode: str = "random",
) -> _control.Scenario:
    """Temperature-control benchmark on an n-by-n zone mesh.

    Each zone holds (integrator, temperature) states driven by

        [U+; T+] = [[I, t_s I], [0, I - t_s L]] [U; T] + [0; 0.5 t_s I] u + w

    with L the Laplacian weighted by the inter-zone heat-exchange
    coefficient.  Disturbances are i.i.d. Gaussian with the given variance;
    state costs are q*I, the horizon-end regulariser q_f*I, and input costs
    either identity or redrawn diagonals 5|Z|+1 per step.
    """
    if n < 2:
        raise ValueError("mesh needs at least a 2x2 grid")
    edges = mesh_edges(n)
    nodes = n * n
    graph = build_graph(edges, [2] * nodes, [1] * nodes)

    degree = np.zeros(nodes)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    A_blocks = {}
    B_blocks = {}
    for i in range(nodes):
        A_blocks[(i, i)] = np.array(
            [[1.0, t_s], [0.0, 1.0 - t_s * k_coupling * degree[i]]]
        )
        B_blocks[(i, i)] = np.array([[0.0], [0.5 * t_s]])
    for a, b in edges:
        coup = np.array([[0.0, 0.0], [0.0, t_s * k_coupling]])
        A_blocks[(a, b)] = coup
        A_blocks[(b, a)] = coup
    system = assemble(graph, A_blocks, B_blocks)

    sched = _build_schedule(graph, f"{q}", f"{q_f}", r_mode, T, seed)
    w = _gaussian_disturbances(graph.n_states, noise_var, T, seed)
    x0 = np.zeros(graph.n_states) if x0 is None else np.asarray(x0, dtype=float)
    return _control.Scenario(
        system=system,
        schedule=sched,
        horizon=T,
        x0=x0,
        disturbances=w,
        rng_seed=seed,
    )


def build_uncertainty_scenario(base, T: int = 48):
    """The forecast-error study setup: the true parameter trajectory is the
    realized disturbance sequence itself (the parameter-to-disturbance map is
    the identity).

    ``base`` is either a Scenario already built at horizon T or a
    ScenarioConfig to rebuild at that horizon.
    """
    if isinstance(base, ScenarioConfig):
        scenario = build_scenario(replace(base, T=T))
    else:
        scenario = base
        if scenario.horizon != T:
            raise ValueError(
                f"base scenario has horizon {scenario.horizon}; build it at T={T}"
            )
    theta = ParamTrajectory(values=tuple(scenario.disturbances.values))
    return scenario, theta


def _gaussian_disturbances(dim: int, noise_var: float, T: int, seed: int) -> DisturbanceSeq:
    sigma = float(np.sqrt(noise_var))
    vals = tuple(
        sigma * _rng.normal(seed, ("disturbance", t), dim) for t in range(T)
    )
    return DisturbanceSeq(values=vals)


def _cost_block(spec: str, dim: int, default_scale: float | None = None) -> np.ndarray:
    toks = spec.split()
    if toks[0] == "file":
        M = np.loadtxt(toks[1], ndmin=2)
        if M.shape != (dim, dim):
            raise ValueError(f"cost block in {toks[1]} has shape {M.shape}, need ({dim},{dim})")
        return M
    return float(spec) * np.eye(dim)


def _build_schedule(graph, q_spec: str, qf_spec: str, r_mode: str, T: int, seed: int):
    state_rows = tuple(
        tuple(_costs.quadratic(_cost_block(q_spec, graph.state_dims[i])) for i in range(graph.node_count))
        for _ in range(T + 1)
    )
    terminal = tuple(
        _costs.quadratic(_cost_block(qf_spec, graph.state_dims[i]))
        for i in range(graph.node_count)
    )
    if r_mode == "random":
        input_rows = tuple(
            _costs.random_input_cost(
                graph.input_dims, _rng.NormalStream(seed, "input-cost", t)
            )
            for t in range(T)
        )
    elif r_mode == "fixed":
        row = tuple(
            _costs.quadratic(np.eye(graph.input_dims[i])) for i in range(graph.node_count)
        )
        input_rows = tuple(row for _ in range(T))
    else:
        raise ValueError(f"unknown r_mode {r_mode!r}")
    return _costs.CostSchedule(
        state_costs=state_rows, input_costs=input_rows, terminal=terminal
    )


def _build_graph_from_spec(spec: str):
    toks = spec.split()
    if toks[0] == "mesh":
        n = int(toks[1])
        return build_graph(mesh_edges(n), [2] * (n * n), [1] * (n * n))
    if toks[0] == "path":
        n = int(toks[1])
        return build_graph(path_edges(n), [1] * n, [1] * n)
    if toks[0] == "file":
        return load_graph(toks[1])
    raise ValueError(f"unknown graph spec {spec!r}")


def _random_system(graph, seed: int, stability_margin: float) -> NetworkedSystem:
    """Random graph-supported blocks with the open-loop spectral radius scaled
    to the requested margin."""
    A_blocks = {}
    B_blocks = {}
    for i in range(graph.node_count):
        A_blocks[(i, i)] = _rng.normal(
            seed, ("sys-A", i, i), graph.state_dims[i] * graph.state_dims[i]
        ).reshape(graph.state_dims[i], graph.state_dims[i])
        if graph.input_dims[i]:
            B_blocks[(i, i)] = _rng.normal(
                seed, ("sys-B", i), graph.state_dims[i] * graph.input_dims[i]
            ).reshape(graph.state_dims[i], graph.input_dims[i])
    for a, b in graph.edges:
        for (i, j) in ((a, b), (b, a)):
            A_blocks[(i, j)] = 0.5 * _rng.normal(
                seed, ("sys-A", i, j), graph.state_dims[i] * graph.state_dims[j]
            ).reshape(graph.state_dims[i], graph.state_dims[j])
    sys0 = assemble(graph, A_blocks, B_blocks)
    rho = float(np.max(np.abs(np.linalg.eigvals(sys0.A))))
    if rho > 0:
        scale = stability_margin / rho
        A_blocks = {key: scale * blk for key, blk in A_blocks.items()}
    return assemble(graph, A_blocks, B_blocks)


def build_scenario(cfg: ScenarioConfig) -> _control.Scenario:
    graph = _build_graph_from_spec(cfg.graph_spec)
    toks = cfg.system_spec.split()
    if toks[0] == "hvac":
        if cfg.graph_spec.split()[0] != "mesh":
            raise ValueError("the hvac system runs on a mesh graph")
        n = int(cfg.graph_spec.split()[1])
        return build_hvac_mesh(
            n=n,
            t_s=cfg.t_s,
            k_coupling=cfg.coupling,
            q=cfg.q,
            q_f=cfg.q_f,
            noise_var=cfg.noise_var,
            seed=cfg.seed,
            T=cfg.T,
            x0=_build_x0(cfg, graph.n_states),
            r_mode=cfg.r_mode,
        )
    if toks[0] == "random":
        margin = float(toks[1]) if len(toks) > 1 else 0.9
        system = _random_system(graph, cfg.seed, margin)
    elif toks[0] == "file":
        system = load_system(toks[1])
        graph = system.graph
    else:
        raise ValueError(f"unknown system spec {cfg.system_spec!r}")

    sched = _build_schedule(graph, cfg.q, cfg.q_f, cfg.r_mode, cfg.T, cfg.seed)
    w = _build_disturbances(cfg, graph.n_states)
    return _control.Scenario(
        system=system,
        schedule=sched,
        horizon=cfg.T,
        x0=_build_x0(cfg, graph.n_states),
        disturbances=w,
        rng_seed=cfg.seed,
    )


def _build_x0(cfg: ScenarioConfig, dim: int) -> np.ndarray:
    toks = cfg.x0_spec.split()
    if toks[0] == "zero":
        return np.zeros(dim)
    if toks[0] == "constant":
        return np.full(dim, float(toks[1]))
    if toks[0] == "file":
        x = np.loadtxt(toks[1])
        if x.shape != (dim,):
            raise ValueError(f"x0 file has shape {x.shape}, need ({dim},)")
        return x
    raise ValueError(f"unknown x0 spec {cfg.x0_spec!r}")


def _build_disturbances(cfg: ScenarioConfig, dim: int) -> DisturbanceSeq:
    toks = cfg.disturbance_spec.split()
    if toks[0] == "gaussian":
        return _gaussian_disturbances(dim, cfg.noise_var, cfg.T, cfg.seed)
    if toks[0] in ("file", "theta"):
        M = np.loadtxt(toks[1], ndmin=2)
        if M.shape != (cfg.T, dim):
            raise ValueError(f"disturbance file has shape {M.shape}, need ({cfg.T},{dim})")
        return DisturbanceSeq(values=tuple(M[t] for t in range(cfg.T)))
    raise ValueError(f"unknown disturbance spec {cfg.disturbance_spec!r}")


# --- CSV emission -----------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_run_csv(path, run: _control.RunRecord) -> None:
    """Schema: t,state_norm,step_cost,cum_cost,residual (one row per step plus
    the terminal state; residual is 0 where the step applied a committed input)."""
    T = run.horizon
    residuals = {s.t: s.max_residual for s in run.solver_stats}
    cum = 0.0
    with open(path, "w") as fh:
        fh.write("t,state_norm,step_cost,cum_cost,residual\n")
        for t in range(T + 1):
            if t < T:
                step_cost = run.state_cost_series[t] + run.input_cost_series[t]
            else:
                step_cost = run.state_cost_series[t]
            cum += step_cost
            fh.write(
                f"{t},{_fmt(np.linalg.norm(run.states[t]))},{_fmt(step_cost)},"
                f"{_fmt(cum)},{_fmt(residuals.get(t, 0.0))}\n"
            )


@dataclass(frozen=True)
class SummaryRow:
    tag: str
    k: int | None
    kappa: int | None
    total_cost: float
    regret: float
    regret_norm: float


def write_summary_csv(path, rows: Sequence[SummaryRow]) -> None:
    """Schema: tag,k,kappa,total_cost,regret,regret_norm."""
    with open(path, "w") as fh:
        fh.write("tag,k,kappa,total_cost,regret,regret_norm\n")
        for r in rows:
            k = "" if r.k is None else str(r.k)
            kappa = "" if r.kappa is None else str(r.kappa)
            fh.write(
                f"{r.tag},{k},{kappa},{_fmt(r.total_cost)},{_fmt(r.regret)},"
                f"{_fmt(r.regret_norm)}\n"
            )


def write_decay_csv(path, profile: _decay.DecayProfile) -> None:
    """Schema: distance,max_norm rows, then a JSON-like fit summary comment."""
    with open(path, "w") as fh:
        fh.write("distance,max_norm\n")
        for d, v in zip(profile.distances, profile.max_block_norms):
            fh.write(f"{d},{_fmt(v)}\n")
        fh.write(
            f'# {{"alpha": {_fmt(profile.fit_alpha)}, "rho": {_fmt(profile.fit_rho)}, '
            f'"r2": {_fmt(profile.fit_r2)}}}\n'
        )


def write_regret_timeseries_csv(path, runs: Sequence[_control.RunRecord],
                                opt_run: _control.RunRecord) -> None:
    """Schema: t, then one cumulative-regret column per controller tag."""
    def cum_series(run):
        T = run.horizon
        out = []
        acc = 0.0
        for t in range(T + 1):
            acc += run.state_cost_series[t]
            if t < T:
                acc += run.input_cost_series[t]
            out.append(acc)
        return out

    base = cum_series(opt_run)
    series = {run.controller_tag: cum_series(run) for run in runs}
    with open(path, "w") as fh:
        fh.write("t," + ",".join(series) + "\n")
        for t in range(len(base)):
            vals = ",".join(_fmt(series[tag][t] - base[t]) for tag in series)
            fh.write(f"{t},{vals}\n")


# --- experiment driver ------------------------------------------------------


@dataclass
class ExperimentResult:
    runs: dict[str, _control.RunRecord]
    summary: list[SummaryRow]
    files: list[str] = field(default_factory=list)


def _check_radii(scenario, radii) -> None:
    diam = scenario.system.graph.diameter()
    for kappa in radii:
        if np.isfinite(diam) and kappa > diam:
            raise ValueError(
                f"truncation radius {kappa} exceeds the graph diameter {int(diam)}"
            )


def _summary_row(spec: ControllerSpec, run, opt_run) -> SummaryRow:
    reg = _control.regret(run, opt_run) if run is not opt_run else 0.0
    norm = reg / opt_run.total_cost if opt_run.total_cost > 0 else float("nan")
    return SummaryRow(
        tag=run.controller_tag, k=spec.k, kappa=spec.kappa,
        total_cost=run.total_cost, regret=reg, regret_norm=norm,
    )


def _mark_partial(files: list[str]) -> None:
    for f in files:
        if os.path.exists(f):
            os.replace(f, f + ".partial")


def run_experiment(
    config: ScenarioConfig,
    out_dir: str | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> ExperimentResult:
    """Build the scenario once, run the offline optimum then every configured
    controller, and write per-run CSVs plus the regret summary.

    On a solver failure every file written so far gains a ``.partial``
    suffix and the error propagates.
    """
    cfg = config
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if not cfg.controllers:
        raise ValueError("config lists no controllers")
    os.makedirs(cfg.out_dir, exist_ok=True)
    scenario = build_scenario(cfg)
    _check_radii(scenario, (c.kappa for c in cfg.controllers if c.kappa is not None))

    result = ExperimentResult(runs={}, summary=[])

    def emit_run(run):
        path = os.path.join(cfg.out_dir, f"{run.controller_tag}_{cfg.seed}.csv")
        write_run_csv(path, run)
        result.files.append(path)

    try:
        opt_run = _control.run_opt(scenario)
    except _control.ControllerError:
        _mark_partial(result.files)
        raise
    result.runs["opt"] = opt_run
    emit_run(opt_run)
    result.summary.append(
        _summary_row(ControllerSpec(kind="opt"), opt_run, opt_run)
    )

    timeseries_runs = []
    try:
        for spec in cfg.controllers:
            if spec.kind == "opt":
                continue  # always run and already emitted
            if spec.kind == "pc":
                run = _control.run_pc(scenario, spec.k)
            elif spec.kind == "dtpc":
                run = _control.run_dtpc(scenario, spec.k, spec.kappa, workers=workers)
            else:
                run = _control.run_udtpc(
                    scenario, spec.k, spec.kappa, spec.forecast, workers=workers
                )
            result.runs[run.controller_tag] = run
            emit_run(run)
            result.summary.append(_summary_row(spec, run, opt_run))
            timeseries_runs.append(run)
    except _control.ControllerError:
        summary_path = os.path.join(cfg.out_dir, f"summary_{cfg.seed}.csv")
        write_summary_csv(summary_path, result.summary)
        result.files.append(summary_path)
        _mark_partial(result.files)
        raise

    summary_path = os.path.join(cfg.out_dir, f"summary_{cfg.seed}.csv")
    write_summary_csv(summary_path, result.summary)
    result.files.append(summary_path)

    if timeseries_runs:
        ts_path = os.path.join(cfg.out_dir, f"regret_vs_time_{cfg.seed}.csv")
        write_regret_timeseries_csv(ts_path, timeseries_runs, opt_run)
        result.files.append(ts_path)
    return result


def run_sweep(
    config: ScenarioConfig,
    vary: str,
    values: Sequence[int],
    out_dir: str | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> list[SummaryRow]:
    """Run the decentralized controller across a parameter range against one
    offline baseline; writes one summary CSV named after the swept axis."""
    cfg = config
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    base = next((c for c in cfg.controllers if c.kind == "dtpc"), None)
    if base is None:
        raise ValueError("sweep needs a dtpc controller entry to anchor the fixed axis")
    os.makedirs(cfg.out_dir, exist_ok=True)
    scenario = build_scenario(cfg)
    _check_radii(scenario, values if vary == "kappa" else [base.kappa])
    opt_run = _control.run_opt(scenario)
    rows = [ _summary_row(ControllerSpec(kind="opt"), opt_run, opt_run) ]
    for v in values:
        k = v if vary == "k" else base.k
        kappa = v if vary == "kappa" else base.kappa
        spec = ControllerSpec(kind="dtpc", k=k, kappa=kappa)
        run = _control.run_dtpc(scenario, k, kappa, workers=workers)
        write_run_csv(
            os.path.join(cfg.out_dir, f"{run.controller_tag}_{cfg.seed}.csv"), run
        )
        rows.append(_summary_row(spec, run, opt_run))
    write_summary_csv(
        os.path.join(cfg.out_dir, f"sweep_{vary}_{cfg.seed}.csv"), rows
    )
    return rows


def run_decay(
    config: ScenarioConfig,
    mode: str,
    out_dir: str | None = None,
    seed: int | None = None,
    kappa_range: Sequence[int] | None = None,
    workers: int = 1,
) -> _decay.DecayProfile:
    """Produce one decay profile CSV: saddle-inverse spatial decay, centre-node
    truncation-gap decay, or closed-loop trajectory-gap decay."""
    from . import ocp as _ocp

    cfg = config
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    os.makedirs(cfg.out_dir, exist_ok=True)
    scenario = build_scenario(cfg)
    anchor = next((c for c in cfg.controllers if c.kind in ("dtpc", "pc")), None)
    k = anchor.k if anchor is not None else min(8, cfg.T)
    diam = int(scenario.system.graph.diameter())
    if kappa_range is None:
        kappa_range = list(range(0, diam + 1))

    if mode == "kkt":
        problem = _ocp.OcpProblem(
            system=scenario.system, schedule=scenario.schedule,
            start_time=0, horizon=k,
            init_state=scenario.x0,
            disturbances=tuple(scenario.disturbances.window(0, k)),
            terminal=_ocp.FreeTerminal(costs=scenario.schedule.terminal),
        )
        profile = _decay.kkt_inverse_decay(problem, pair_graph="spatial")
    elif mode == "truncation":
        center = int(np.argmin(np.max(scenario.system.graph.distances, axis=1)))
        problem = _ocp.OcpProblem(
            system=scenario.system, schedule=scenario.schedule,
            start_time=0, horizon=k,
            init_state=scenario.x0,
            disturbances=tuple(scenario.disturbances.window(0, k)),
            terminal=_ocp.FreeTerminal(costs=scenario.schedule.terminal),
        )
        profile = _decay.truncation_gap(problem, center, kappa_range)
    elif mode == "trajectory":
        profile = _decay.trajectory_gap_curve(scenario, k, kappa_range, workers=workers)
    else:
        raise ValueError(f"unknown decay mode {mode!r}")

    write_decay_csv(
        os.path.join(cfg.out_dir, f"decay_{mode}_{cfg.seed}.csv"), profile
    )
    return profile
