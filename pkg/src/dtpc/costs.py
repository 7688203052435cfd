"""Node-separable, strongly convex stage costs and their schedules.

Two cost families ship: plain quadratics (the benchmark) and quadratics with
an additive log-cosh term, which keeps strong convexity and smoothness while
giving the solver a genuinely non-quadratic Newton path.  Every cost is zero
at the origin with zero gradient there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

QUADRATIC = "quadratic"
QUAD_LOGCOSH = "quadratic-plus-logcosh"

_PD_FLOOR = 1e-12


def _log_cosh(z: np.ndarray) -> np.ndarray:
    # |z| + log1p(e^{-2|z|}) - log 2 avoids cosh overflow
    a = np.abs(z)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def _sech_sq(z: np.ndarray) -> np.ndarray:
    a = np.abs(z)
    s = 2.0 * np.exp(-a) / (1.0 + np.exp(-2.0 * a))
    return s * s


@dataclass(frozen=True)
class NodeCost:
    """One node's stage cost: 0.5 z'Mz plus an optional log-cosh penalty."""

    kind: str
    matrix: np.ndarray
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in (QUADRATIC, QUAD_LOGCOSH):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("log-cosh weight must be non-negative")
        if self.kind == QUADRATIC and self.scale != 0.0:
            raise ValueError("a pure quadratic carries no log-cosh weight")
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if M.size and not np.allclose(M, M.T, atol=1e-12):
            raise ValueError("cost matrix must be symmetric")
        object.__setattr__(self, "matrix", M)
        M.setflags(write=False)
        if M.size:
            eigs = np.linalg.eigvalsh(M)
            if eigs[0] <= _PD_FLOOR:
                raise ValueError(f"cost matrix not positive definite (min eig {eigs[0]:.3e})")
            object.__setattr__(self, "_mu", float(eigs[0]))
            object.__setattr__(self, "_smooth", float(eigs[-1]) + self.scale)
        else:
            object.__setattr__(self, "_mu", np.inf)
            object.__setattr__(self, "_smooth", 0.0)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] if self.matrix.size else 0

    @property
    def strong_convexity(self) -> float:
        """Global lower Hessian eigenvalue bound (the log-cosh term only adds curvature)."""
        return self._mu

    @property
    def smoothness(self) -> float:
        """Global upper Hessian eigenvalue bound."""
        return self._smooth

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        v = 0.5 * float(z @ (self.matrix @ z))
        if self.scale:
            v += self.scale * float(np.sum(_log_cosh(z)))
        return v

    def eval(self, z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Value, gradient, and Hessian at ``z``."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"point has shape {z.shape}, cost dimension is {self.dim}")
        Mz = self.matrix @ z
        val = 0.5 * float(z @ Mz)
        grad = Mz.copy()
        hess = self.matrix.copy()
        if self.scale:
            val += self.scale * float(np.sum(_log_cosh(z)))
            grad += self.scale * np.tanh(z)
            hess = hess + self.scale * np.diag(_sech_sq(z))
        return val, grad, hess


def quadratic(matrix: np.ndarray) -> NodeCost:
    return NodeCost(kind=QUADRATIC, matrix=np.asarray(matrix, dtype=float))


def quad_logcosh(matrix: np.ndarray, scale: float) -> NodeCost:
    return NodeCost(kind=QUAD_LOGCOSH, matrix=np.asarray(matrix, dtype=float), scale=scale)


@dataclass(frozen=True)
class CostSchedule:
    """Time-by-node grids of stage costs over a horizon T.

    ``state_costs[t][i]`` prices node i's state at time t for t = 0..T;
    ``input_costs[t][i]`` prices the input applied at time t (the cost the
    next state pays for), t = 0..T-1; ``terminal[i]`` is the horizon-end
    regulariser used when a receding-horizon solve cuts the lookahead short.
    """

    state_costs: tuple[tuple[NodeCost, ...], ...]
    input_costs: tuple[tuple[NodeCost, ...], ...]
    terminal: tuple[NodeCost, ...]

    def __post_init__(self):
        if len(self.state_costs) != len(self.input_costs) + 1:
            raise ValueError(
                f"{len(self.state_costs)} state-cost rows need "
                f"{len(self.state_costs) - 1} input-cost rows, got {len(self.input_costs)}"
            )
        for cost in self.terminal:
            if cost.kind != QUADRATIC:
                continue
            d = cost.dim
            if d > 1 and not np.allclose(cost.matrix, cost.matrix[0, 0] * np.eye(d)):
                warnings.warn(
                    "anisotropic terminal cost: not a function of the state norm alone",
                    stacklevel=2,
                )

    @property
    def horizon(self) -> int:
        return len(self.state_costs) - 1


def grid_value(row: Sequence[NodeCost], z: np.ndarray, offsets: np.ndarray) -> float:
    total = 0.0
    for i, cost in enumerate(row):
        total += cost.value(z[offsets[i] : offsets[i + 1]])
    return total


def grid_grad(row: Sequence[NodeCost], z: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for i, cost in enumerate(row):
        sl = slice(int(offsets[i]), int(offsets[i + 1]))
        _, g, _ = cost.eval(z[sl])
        out[sl] = g
    return out


def grid_hessian(row: Sequence[NodeCost], z: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    n = int(offsets[-1])
    out = np.zeros((n, n))
    for i, cost in enumerate(row):
        sl = slice(int(offsets[i]), int(offsets[i + 1]))
        _, _, h = cost.eval(z[sl])
        out[sl, sl] = h
    return out


def total_cost(
    schedule: CostSchedule,
    trajectory: Sequence[np.ndarray],
    inputs: Sequence[np.ndarray],
    state_offsets: np.ndarray,
    input_offsets: np.ndarray,
) -> float:
    """Sum of every stage's state cost plus every applied input's cost."""
    T = schedule.horizon
    if len(trajectory) != T + 1 or len(inputs) != T:
        raise ValueError(
            f"expected {T + 1} states and {T} inputs, got "
            f"{len(trajectory)} and {len(inputs)}"
        )
    total = 0.0
    for t in range(T + 1):
        total += grid_value(schedule.state_costs[t], trajectory[t], state_offsets)
    for t in range(T):
        total += grid_value(schedule.input_costs[t], inputs[t], input_offsets)
    return total


def random_input_cost(node_dims: Sequence[int], rng) -> tuple[NodeCost, ...]:
    """One time step of diagonal input costs with entries 5|z| + 1, z standard normal.

    ``rng`` is any object with a ``standard_normal(n)`` method; a seeded
    stream makes the draw reproducible.
    """
    total = int(sum(node_dims))
    z = np.asarray(rng.standard_normal(total), dtype=float)
    row = []
    at = 0
    for d in node_dims:
        diag = 5.0 * np.abs(z[at : at + d]) + 1.0
        row.append(quadratic(np.diag(diag)))
        at += d
    return tuple(row)


def save_schedule(path, schedule: CostSchedule) -> None:
    """Text dump with one keyed line per (time, node) block: ``f t i ...`` for
    state costs, ``c t i ...`` for input costs, ``F i ...`` for the terminal
    grid; row-major entries, log-cosh weight appended after a ``scale`` key."""

    def write_cost(fh, key, cost):
        vals = " ".join(repr(float(v)) for v in cost.matrix.ravel())
        line = f"{key} {vals}"
        if cost.scale:
            line += f" scale {cost.scale!r}"
        fh.write(line + "\n")

    with open(path, "w") as fh:
        fh.write(f"horizon {schedule.horizon}\n")
        for t, row in enumerate(schedule.state_costs):
            for i, cost in enumerate(row):
                write_cost(fh, f"f {t} {i} {cost.dim}", cost)
        for t, row in enumerate(schedule.input_costs):
            for i, cost in enumerate(row):
                write_cost(fh, f"c {t} {i} {cost.dim}", cost)
        for i, cost in enumerate(schedule.terminal):
            write_cost(fh, f"F {i} {cost.dim}", cost)


def load_schedule(path) -> CostSchedule:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    head = lines[0].split()
    if head[0] != "horizon":
        raise ValueError("schedule file must start with a 'horizon T' line")
    T = int(head[1])

    def read_cost(toks):
        d = int(toks[0])
        scale = 0.0
        body = toks[1:]
        if "scale" in body:
            at = body.index("scale")
            scale = float(body[at + 1])
            body = body[:at]
        M = np.array([float(v) for v in body]).reshape(d, d)
        if scale:
            return quad_logcosh(M, scale)
        return quadratic(M)

    state: dict[tuple[int, int], NodeCost] = {}
    inputs: dict[tuple[int, int], NodeCost] = {}
    terminal: dict[int, NodeCost] = {}
    for ln in lines[1:]:
        toks = ln.split()
        if toks[0] == "f":
            state[(int(toks[1]), int(toks[2]))] = read_cost(toks[3:])
        elif toks[0] == "c":
            inputs[(int(toks[1]), int(toks[2]))] = read_cost(toks[3:])
        elif toks[0] == "F":
            terminal[int(toks[1])] = read_cost(toks[2:])
        else:
            raise ValueError(f"unknown schedule line key {toks[0]!r}")

    n_nodes = max(i for (_, i) in state) + 1
    return CostSchedule(
        state_costs=tuple(
            tuple(state[(t, i)] for i in range(n_nodes)) for t in range(T + 1)
        ),
        input_costs=tuple(
            tuple(inputs[(t, i)] for i in range(n_nodes)) for t in range(T)
        ),
        terminal=tuple(terminal[i] for i in range(n_nodes)),
    )
