"""Distributed truncated predictive control of networked LTI systems.

The package splits into graph machinery (`network`), dynamics (`lti`), cost
schedules (`costs`), the saddle-point OCP solver (`ocp`), closed-loop
controllers and metrics (`control`), forecast-error models (`forecast`),
decay diagnostics (`decay`), and the benchmark/CLI layer (`bench`, `cli`).
"""

from .control import (
    AccessLog,
    RunRecord,
    Scenario,
    one_step_terminal,
    regret,
    run_dtpc,
    run_opt,
    run_pc,
    run_udtpc,
)
from .costs import CostSchedule, NodeCost, quad_logcosh, quadratic, total_cost
from .decay import DecayProfile, disturbance_bounds, kkt_inverse_decay, trajectory_gap_curve, truncation_gap
from .forecast import ForecastModel, ParamTrajectory, cumulative_phi, forecast_window, phi_cumulative
from .lti import DisturbanceSeq, NetworkedSystem, assemble, controllability_index, rollout, stabilizability_probe, step
from .network import NetworkGraph, TruncationSet, build_graph, khop, truncate
from .ocp import FixedTerminal, FreeTerminal, OcpProblem, OcpSolution, build_kkt, popt_check, solve, solve_truncated

__version__ = "0.1.0"

__all__ = [
    "AccessLog",
    "CostSchedule",
    "DecayProfile",
    "DisturbanceSeq",
    "FixedTerminal",
    "ForecastModel",
    "FreeTerminal",
    "NetworkGraph",
    "NetworkedSystem",
    "NodeCost",
    "OcpProblem",
    "OcpSolution",
    "ParamTrajectory",
    "RunRecord",
    "Scenario",
    "TruncationSet",
    "assemble",
    "build_graph",
    "build_kkt",
    "controllability_index",
    "cumulative_phi",
    "disturbance_bounds",
    "forecast_window",
    "khop",
    "kkt_inverse_decay",
    "one_step_terminal",
    "phi_cumulative",
    "popt_check",
    "quad_logcosh",
    "quadratic",
    "regret",
    "rollout",
    "run_dtpc",
    "run_opt",
    "run_pc",
    "run_udtpc",
    "solve",
    "solve_truncated",
    "stabilizability_probe",
    "step",
    "total_cost",
    "trajectory_gap_curve",
    "truncate",
    "truncation_gap",
]
