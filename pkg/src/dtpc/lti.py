"""Networked linear time-invariant dynamics and system-regularity probes.

A networked system is an (A, B) pair whose (i, j) blocks vanish whenever
nodes i and j are not graph-adjacent.  Stepping is done blockwise over the
adjacency structure, which keeps the per-node update local by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .network import NetworkGraph


@dataclass(frozen=True)
class NetworkedSystem:
    """Block dynamics matrices over a graph, immutable after assembly."""

    graph: NetworkGraph
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A.setflags(write=False)
        self.B.setflags(write=False)

    def a_block(self, i: int, j: int) -> np.ndarray:
        g = self.graph
        return self.A[g.state_slice(i), g.state_slice(j)]

    def b_block(self, i: int, j: int) -> np.ndarray:
        g = self.graph
        return self.B[g.state_slice(i), g.input_slice(j)]


@dataclass(frozen=True)
class DisturbanceSeq:
    """Time-indexed disturbance vectors, one full state-space vector per step."""

    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        for v in self.values:
            v.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int) -> np.ndarray:
        return self.values[t]

    def window(self, t: int, length: int, log=None) -> list[np.ndarray]:
        """Disturbances ``w_t .. w_{t+length-1}``; reads are recorded on ``log``."""
        if t < 0 or t + length > len(self.values):
            raise IndexError(f"window [{t}, {t + length}) outside 0..{len(self.values)}")
        if log is not None:
            for tau in range(length):
                log.note_disturbance_read(t, t + tau)
        return [self.values[t + tau] for tau in range(length)]


@dataclass(frozen=True)
class ControllabilityResult:
    """Smallest stage count whose reduced controllability matrix clears the
    singular-value threshold; ``index`` is None when no stage count does."""

    index: int | None
    sigma_min: float

    @property
    def found(self) -> bool:
        return self.index is not None


@dataclass(frozen=True)
class StabilizabilityProbe:
    """Outcome of the closed-loop decay fit with a Riccati-synthesised gain."""

    stabilizable: bool
    L: float | None
    gamma: float | None
    spectral_radius: float
    riccati_converged: bool


class RiccatiDivergence(RuntimeError):
    """Fixed-point iteration for the control Riccati equation did not settle."""


def assemble(
    graph: NetworkGraph,
    A_blocks: Mapping[tuple[int, int], np.ndarray],
    B_blocks: Mapping[tuple[int, int], np.ndarray],
) -> NetworkedSystem:
    """Place per-pair blocks into full matrices, rejecting off-graph support.

    Blocks may only be supplied for pairs at hop distance <= 1; everything
    else is implicitly zero.
    """
    A = np.zeros((graph.n_states, graph.n_states))
    B = np.zeros((graph.n_states, graph.n_inputs))
    for (i, j), blk in A_blocks.items():
        if graph.distance(i, j) > 1:
            raise ValueError(f"A block ({i}, {j}) supplied for non-adjacent pair")
        blk = np.atleast_2d(np.asarray(blk, dtype=float))
        want = (graph.state_dims[i], graph.state_dims[j])
        if blk.shape != want:
            raise ValueError(f"A block ({i}, {j}) has shape {blk.shape}, expected {want}")
        A[graph.state_slice(i), graph.state_slice(j)] = blk
    for (i, j), blk in B_blocks.items():
        if graph.distance(i, j) > 1:
            raise ValueError(f"B block ({i}, {j}) supplied for non-adjacent pair")
        blk = np.atleast_2d(np.asarray(blk, dtype=float))
        want = (graph.state_dims[i], graph.input_dims[j])
        if blk.shape != want:
            raise ValueError(f"B block ({i}, {j}) has shape {blk.shape}, expected {want}")
        B[graph.state_slice(i), graph.input_slice(j)] = blk
    return NetworkedSystem(graph=graph, A=A, B=B)


def step(sys: NetworkedSystem, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """One dynamics step, accumulated per node over graph-adjacent blocks only."""
    g = sys.graph
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (g.n_states,) or u.shape != (g.n_inputs,) or w.shape != (g.n_states,):
        raise ValueError(
            f"dimension mismatch: x {x.shape}, u {u.shape}, w {w.shape} for "
            f"({g.n_states} states, {g.n_inputs} inputs)"
        )
    out = w.copy()
    for i in range(g.node_count):
        si = g.state_slice(i)
        acc = out[si]
        for j in g.neighbors_closed(i):
            acc += sys.A[si, g.state_slice(j)] @ x[g.state_slice(j)]
            nu = g.input_dims[j]
            if nu:
                acc += sys.B[si, g.input_slice(j)] @ u[g.input_slice(j)]
    return out


def rollout(
    sys: NetworkedSystem,
    x0: np.ndarray,
    u_seq: Sequence[np.ndarray],
    w_seq: Sequence[np.ndarray],
) -> list[np.ndarray]:
    """Trajectory of length ``len(u_seq) + 1`` starting from ``x0``."""
    if len(u_seq) != len(w_seq):
        raise ValueError(f"{len(u_seq)} inputs vs {len(w_seq)} disturbances")
    traj = [np.asarray(x0, dtype=float)]
    for u, w in zip(u_seq, w_seq):
        traj.append(step(sys, traj[-1], u, w))
    return traj


def controllability_index(
    sys: NetworkedSystem, sigma_threshold: float = 1e-8
) -> ControllabilityResult:
    """Smallest d with sigma_min([B, AB, ..., A^{d-1}B]) above the threshold.

    Floating-point rank is threshold-relative, so the caller picks the cutoff;
    an unactuated system reports a not-found result rather than raising.
    """
    if sigma_threshold <= 0:
        raise ValueError("sigma_threshold must be positive")
    n = sys.graph.n_states
    if sys.graph.n_inputs == 0:
        return ControllabilityResult(index=None, sigma_min=0.0)
    blocks = []
    term = sys.B
    best = 0.0
    for d in range(1, n + 1):
        blocks.append(term)
        ctrl = np.hstack(blocks)
        sigma = float(np.linalg.svd(ctrl, compute_uv=False)[-1]) if ctrl.shape[1] >= n else 0.0
        if ctrl.shape[1] >= n:
            best = max(best, sigma)
        if sigma >= sigma_threshold:
            return ControllabilityResult(index=d, sigma_min=sigma)
        term = sys.A @ term
    return ControllabilityResult(index=None, sigma_min=best)


def _riccati_gain(A: np.ndarray, B: np.ndarray, max_iter: int = 20000, tol: float = 1e-12):
    """Fixed-point iteration for the unit-weight control Riccati equation."""
    n = A.shape[0]
    Q = np.eye(n)
    R = np.eye(B.shape[1]) if B.shape[1] else np.zeros((0, 0))
    P = Q.copy()
    for _ in range(max_iter):
        if B.shape[1]:
            K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        else:
            K = np.zeros((0, n))
        P_next = A.T @ P @ (A - B @ K) + Q
        gap = float(np.max(np.abs(P_next - P)))
        P = P_next
        if not np.isfinite(gap) or np.max(np.abs(P)) > 1e14:
            raise RiccatiDivergence("iterates diverged")
        if gap <= tol * (1.0 + float(np.max(np.abs(P)))):
            return K
    raise RiccatiDivergence(f"no fixed point after {max_iter} iterations")


def stabilizability_probe(sys: NetworkedSystem, horizon: int) -> StabilizabilityProbe:
    """Synthesise a gain from the Riccati fixed point and fit a geometric
    envelope ||closed^t|| <= L * gamma^t over t = 0..horizon."""
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    try:
        K = _riccati_gain(sys.A, sys.B)
    except RiccatiDivergence:
        rho = float(np.max(np.abs(np.linalg.eigvals(sys.A))))
        return StabilizabilityProbe(False, None, None, rho, riccati_converged=False)
    closed = sys.A - sys.B @ K
    rho = float(np.max(np.abs(np.linalg.eigvals(closed))))
    if rho >= 1.0:
        return StabilizabilityProbe(False, None, None, rho, riccati_converged=True)
    norms = []
    M = np.eye(closed.shape[0])
    for _ in range(horizon + 1):
        norms.append(float(np.linalg.norm(M, 2)))
        M = closed @ M
    ts = np.array([t for t, v in enumerate(norms) if v > 1e-300], dtype=float)
    logs = np.log([v for v in norms if v > 1e-300])
    if ts.size < 2:
        return StabilizabilityProbe(True, norms[0], 0.0, rho, riccati_converged=True)
    slope, intercept = np.polyfit(ts, logs, 1)
    return StabilizabilityProbe(
        True, float(np.exp(intercept)), float(np.exp(slope)), rho, riccati_converged=True
    )


def input_pinv_norm(sys: NetworkedSystem) -> float:
    """||pinv(B)||, reported as a conditioning diagnostic (never enforced)."""
    if sys.graph.n_inputs == 0:
        return np.inf
    return float(np.linalg.norm(np.linalg.pinv(sys.B), 2))


def save_system(path, sys: NetworkedSystem) -> None:
    """Graph header plus one ``A i j ...`` / ``B i j ...`` line per stored block,
    entries row-major."""
    from .network import save_graph

    save_graph(path, sys.graph)
    g = sys.graph
    with open(path, "a") as fh:
        for i in range(g.node_count):
            for j in g.neighbors_closed(i):
                blk = sys.a_block(i, j)
                if np.any(blk):
                    vals = " ".join(repr(float(v)) for v in blk.ravel())
                    fh.write(f"A {i} {j} {vals}\n")
                blk = sys.b_block(i, j)
                if blk.size and np.any(blk):
                    vals = " ".join(repr(float(v)) for v in blk.ravel())
                    fh.write(f"B {i} {j} {vals}\n")


def load_system(path) -> NetworkedSystem:
    from .network import build_graph

    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    graph_lines = []
    block_lines = []
    for ln in lines:
        if ln.split()[0] in ("A", "B"):
            block_lines.append(ln)
        else:
            graph_lines.append(ln)

    head = graph_lines[0].split()
    n = int(head[1])
    state_dims = [0] * n
    input_dims = [0] * n
    for ln in graph_lines[1 : 1 + n]:
        i, nx, nu = (int(t) for t in ln.split())
        state_dims[i] = nx
        input_dims[i] = nu
    edges = [tuple(int(t) for t in ln.split()) for ln in graph_lines[1 + n :]]
    graph = build_graph(edges, state_dims, input_dims)

    A_blocks: dict[tuple[int, int], np.ndarray] = {}
    B_blocks: dict[tuple[int, int], np.ndarray] = {}
    for ln in block_lines:
        toks = ln.split()
        key, i, j = toks[0], int(toks[1]), int(toks[2])
        vals = np.array([float(t) for t in toks[3:]])
        if key == "A":
            A_blocks[(i, j)] = vals.reshape(state_dims[i], state_dims[j])
        else:
            B_blocks[(i, j)] = vals.reshape(state_dims[i], input_dims[j])
    return assemble(graph, A_blocks, B_blocks)
