"""Empirical decay diagnostics.

Three measurements back the package's locality story: geometric decay of the
saddle-matrix inverse's block norms with graph distance, decay of the
centre-node solution gap between centralized and truncated solves as the
truncation radius grows, and decay of the closed-loop trajectory gap between
the decentralized and centralized controllers.  Decay constants are fitted
from the measurements, never derived from closed-form bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import control as _control
from . import ocp as _ocp
from .network import khop

NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class DecayProfile:
    """Per-distance maxima of a block-norm quantity plus a log-linear fit.

    The fit runs over distances whose maxima sit above the noise floor;
    ``fit_rho`` is the per-hop decay factor, ``fit_alpha`` the envelope at
    distance zero, and ``fit_r2`` the regression quality.  Fields are NaN
    when fewer than two bins survive the floor.
    """

    distances: tuple[int, ...]
    max_block_norms: tuple[float, ...]
    fit_alpha: float
    fit_rho: float
    fit_r2: float


def _fit_profile(distances: Sequence[int], norms: Sequence[float]) -> DecayProfile:
    ds = np.asarray(distances, dtype=float)
    vs = np.asarray(norms, dtype=float)
    keep = vs > NOISE_FLOOR
    if int(keep.sum()) < 2:
        return DecayProfile(
            tuple(int(d) for d in distances),
            tuple(float(v) for v in norms),
            float("nan"), float("nan"), float("nan"),
        )
    x, y = ds[keep], np.log(vs[keep])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayProfile(
        tuple(int(d) for d in distances),
        tuple(float(v) for v in norms),
        float(np.exp(intercept)),
        float(np.exp(slope)),
        float(r2),
    )


def _require_quadratic(ks_problem: _ocp.OcpProblem) -> None:
    data_rows = [ks_problem.schedule.state_costs, ks_problem.schedule.input_costs]
    for grid in data_rows:
        for row in grid:
            for cost in row:
                if cost.scale != 0.0:
                    raise ValueError("inverse-decay profiling needs quadratic costs")


def kkt_inverse_decay(problem: _ocp.OcpProblem, pair_graph: str = "spatial") -> DecayProfile:
    """Bin the saddle-inverse block norms by distance and fit the envelope.

    ``pair_graph`` picks the partition: "spatial" groups rows by network
    node (all time steps together) with hop distance; "temporal" groups by
    time step along the lookahead chain; "spacetime" uses (node, step) pairs
    under the distance max(hops, step gap), the coarsest graph the saddle
    matrix is still banded against.
    """
    _require_quadratic(problem)
    ks = _ocp.build_kkt(problem)
    H = ks.H
    lu, piv = scipy.linalg.lu_factor(H)
    idx = ks.index
    g = problem.system.graph

    if pair_graph == "spatial":
        members = list(idx.state_nodes)
        rows = {j: idx.node_rows(j) for j in members}
        dist = lambda a, b: g.distance(a, b)
    elif pair_graph == "temporal":
        members = list(range(idx.horizon + 1))
        rows = {tau: _temporal_rows(idx, tau) for tau in members}
        dist = lambda a, b: float(abs(a - b))
    elif pair_graph == "spacetime":
        members = [(j, tau) for j in idx.state_nodes for tau in range(idx.horizon + 1)]
        rows = {
            (j, tau): idx.node_rows_at(j, tau)
            for (j, tau) in members
        }
        dist = lambda a, b: float(max(g.distance(a[0], b[0]), abs(a[1] - b[1])))
    else:
        raise ValueError(f"unknown pair graph {pair_graph!r}")

    bins: dict[int, float] = {}
    for j in members:
        cols = rows[j]
        E = np.zeros((H.shape[0], cols.size))
        E[cols, np.arange(cols.size)] = 1.0
        X = scipy.linalg.lu_solve((lu, piv), E)
        col_res = float(np.max(np.abs(H @ X - E)))
        if col_res > 1e-9:
            raise _ocp.SingularKktError(
                f"inverse column residual {col_res:.3e} exceeds tolerance"
            )
        for i in members:
            d = dist(i, j)
            if not np.isfinite(d):
                continue
            norm = float(np.linalg.norm(X[rows[i], :], 2))
            key = int(d)
            bins[key] = max(bins.get(key, 0.0), norm)

    distances = sorted(bins)
    return _fit_profile(distances, [bins[d] for d in distances])


def _temporal_rows(idx: _ocp.KktIndex, tau: int) -> np.ndarray:
    parts = [np.arange(idx.state_slice(tau).start, idx.state_slice(tau).stop)]
    if tau < idx.horizon and idx.m:
        parts.append(np.arange(idx.input_slice(tau).start, idx.input_slice(tau).stop))
    parts.append(np.arange(idx.dual_slice(tau).start, idx.dual_slice(tau).stop))
    return np.concatenate(parts)


def truncation_gap(
    problem: _ocp.OcpProblem, i: int, kappa_list: Sequence[int]
) -> DecayProfile:
    """Centre-node primal-dual gap between the centralized solve and the
    radius-limited solves, one value per radius."""
    if problem.support is not None:
        raise ValueError("pass the full problem; truncation happens per radius")
    kappas = list(kappa_list)
    if any(b <= a for a, b in zip(kappas, kappas[1:])):
        raise ValueError("radius list must be strictly ascending")
    g = problem.system.graph
    central = _ocp.solve(problem)
    dims = (g.state_dims[i], g.input_dims[i])
    q_c = central.node_stack(i, dims)
    gaps = []
    for kappa in kappas:
        ts = khop(g, i, kappa)
        reduced = _ocp.solve_truncated(problem, ts)
        gaps.append(float(np.linalg.norm(q_c - reduced.node_stack(i, dims))))
    return _fit_profile(kappas, gaps)


def trajectory_gap_curve(
    scenario: _control.Scenario, k: int, kappa_list: Sequence[int], workers: int = 1
) -> DecayProfile:
    """Summed state gap between the decentralized and centralized closed loops,
    one value per truncation radius."""
    pc = _control.run_pc(scenario, k)
    gaps = []
    for kappa in kappa_list:
        dt = _control.run_dtpc(scenario, k, kappa, workers=workers)
        gap = sum(
            float(np.linalg.norm(a - b)) for a, b in zip(dt.states, pc.states)
        )
        gaps.append(gap)
    return _fit_profile(list(kappa_list), gaps)


def disturbance_bounds(w_seq, k: int) -> tuple[float, float]:
    """The largest single-step norm and the largest k-step norm sum, both over
    start times that leave a full k-window."""
    values = list(getattr(w_seq, "values", w_seq))
    T = len(values)
    if k < 1 or k > T:
        raise ValueError(f"window {k} outside 1..{T}")
    norms = [float(np.linalg.norm(np.asarray(w))) for w in values]
    starts = range(T - k + 1)
    d = max(norms[t] for t in starts)
    d_k = max(sum(norms[t + tau] for tau in range(k)) for t in starts)
    return d, d_k
