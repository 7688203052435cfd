"""Finite-horizon optimal control problems and their saddle-point solves.

One problem type covers the free-terminal receding-horizon subproblem, its
hop-truncated (reduced) counterpart, and the fixed-terminal-state variant.
Stationarity plus the linear dynamics give a symmetric indefinite system

    [ G   J' ] [ z ]   [ 0 ]
    [ J   0  ] [ l ] = [ b ]

with G the block-diagonal cost curvature and J the constraint Jacobian
(identity row for the initial condition, then one block-bidiagonal row per
dynamics step).  Quadratic costs need a single direct factorization;
non-quadratic costs run undamped Newton on the nonlinear residual with a
residual-increase guard.  Large systems are solved through a banded
factorization after a time-interleaving permutation; both paths refine the
solution against the assembled matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .costs import CostSchedule, NodeCost, grid_grad, grid_hessian
from .lti import NetworkedSystem
from .network import TruncationSet, block_offsets, node_indices

KKT_TOL = 1e-9
NEWTON_MAX_ITERS = 50
_BAND_THRESHOLD = 420  # dense LU below this total dimension
_REFINE_STEPS = 2


class SolverError(RuntimeError):
    """Base class for saddle-point solver failures."""


class SingularKktError(SolverError):
    """Singular saddle system: infeasible fixed-terminal target or degenerate costs."""


class NewtonDivergenceError(SolverError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class FreeTerminal:
    """Terminal state pays the given per-node cost grid."""

    costs: tuple[NodeCost, ...]


@dataclass(frozen=True)
class FixedTerminal:
    """Terminal state is pinned to a target; stage costs run through the end."""

    state: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.state, dtype=float)
        object.__setattr__(self, "state", arr)
        arr.setflags(write=False)


@dataclass(frozen=True)
class OcpProblem:
    """One finite-horizon instance over a system and cost schedule.

    When ``support`` is a TruncationSet, ``init_state`` and ``disturbances``
    are already the reduced objects living on its state nodes, and the solve
    runs entirely in the reduced coordinates.
    """

    system: NetworkedSystem
    schedule: CostSchedule
    start_time: int
    horizon: int
    init_state: np.ndarray
    disturbances: tuple[np.ndarray, ...]
    terminal: FreeTerminal | FixedTerminal
    support: TruncationSet | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if len(self.disturbances) != self.horizon:
            raise ValueError(
                f"{len(self.disturbances)} disturbances for horizon {self.horizon}"
            )
        if self.start_time < 0 or self.start_time + self.horizon > self.schedule.horizon:
            raise ValueError(
                f"window [{self.start_time}, {self.start_time + self.horizon}] exceeds "
                f"schedule horizon {self.schedule.horizon}"
            )


@dataclass(frozen=True)
class OcpSolution:
    """Primal-dual solution with per-node extraction helpers.

    For truncated problems the arrays are reduced; ``state_nodes`` and
    ``input_nodes`` carry the embedding back to full node indices.
    """

    states: tuple[np.ndarray, ...]
    inputs: tuple[np.ndarray, ...]
    duals: tuple[np.ndarray, ...]
    kkt_residual: float
    newton_iters: int
    dyn_residual: float
    state_nodes: tuple[int, ...]
    input_nodes: tuple[int, ...]
    state_offsets: np.ndarray
    input_offsets: np.ndarray

    def _state_block(self, node: int) -> slice | None:
        try:
            k = self.state_nodes.index(node)
        except ValueError:
            return None
        return slice(int(self.state_offsets[k]), int(self.state_offsets[k + 1]))

    def _input_block(self, node: int) -> slice | None:
        try:
            k = self.input_nodes.index(node)
        except ValueError:
            return None
        return slice(int(self.input_offsets[k]), int(self.input_offsets[k + 1]))

    def first_input(self, node: int) -> np.ndarray:
        """The node's slice of v_0 (the input a receding-horizon controller applies)."""
        sl = self._input_block(node)
        if sl is None:
            raise KeyError(f"node {node} outside the solved input support")
        return self.inputs[0][sl]

    def node_stack(self, node: int, full_dims: tuple[int, int]) -> np.ndarray:
        """All primal and dual entries of one node, stacked across time steps.

        Absent blocks (node outside the reduced support) contribute zeros, so
        stacks from a centralized and a truncated solve are comparable.
        ``full_dims`` is the node's (state_dim, input_dim) in the full system.
        """
        nx, nu = full_dims
        parts = []
        ssl = self._state_block(node)
        isl = self._input_block(node)
        for y in self.states:
            parts.append(y[ssl] if ssl is not None else np.zeros(nx))
        for v in self.inputs:
            parts.append(v[isl] if isl is not None else np.zeros(nu))
        for lam in self.duals:
            if lam.shape[0] == self.state_offsets[-1] and ssl is not None:
                parts.append(lam[ssl])
            else:
                parts.append(np.zeros(nx))
        return np.concatenate(parts)


@dataclass(frozen=True)
class KktIndex:
    """Row bookkeeping for the assembled saddle system.

    Primal variables interleave (y_tau, v_tau) by time step; dual blocks for
    the initial-condition row and each dynamics row are stacked afterwards.
    """

    horizon: int
    n: int
    m: int
    fixed_terminal: bool
    state_nodes: tuple[int, ...]
    input_nodes: tuple[int, ...]
    state_offsets: np.ndarray
    input_offsets: np.ndarray

    @property
    def n_primal(self) -> int:
        return (self.horizon + 1) * self.n + self.horizon * self.m

    @property
    def n_dual(self) -> int:
        return (self.horizon + 1 + (1 if self.fixed_terminal else 0)) * self.n

    @property
    def dim(self) -> int:
        return self.n_primal + self.n_dual

    def state_slice(self, tau: int) -> slice:
        at = tau * (self.n + self.m)
        return slice(at, at + self.n)

    def input_slice(self, tau: int) -> slice:
        at = tau * (self.n + self.m) + self.n
        return slice(at, at + self.m)

    def dual_slice(self, row: int) -> slice:
        at = self.n_primal + row * self.n
        return slice(at, at + self.n)

    def node_rows(self, node: int) -> np.ndarray:
        """Every row of the saddle system belonging to one network node."""
        rows: list[np.ndarray] = []
        s_local = _local_block(self.state_nodes, self.state_offsets, node)
        i_local = _local_block(self.input_nodes, self.input_offsets, node)
        for tau in range(self.horizon + 1):
            if s_local is not None:
                base = self.state_slice(tau).start
                rows.append(np.arange(base + s_local.start, base + s_local.stop))
        for tau in range(self.horizon):
            if i_local is not None:
                base = self.input_slice(tau).start
                rows.append(np.arange(base + i_local.start, base + i_local.stop))
        n_rows = self.horizon + 1 + (1 if self.fixed_terminal else 0)
        for r in range(n_rows):
            if s_local is not None:
                base = self.dual_slice(r).start
                rows.append(np.arange(base + s_local.start, base + s_local.stop))
        if not rows:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(rows)

    def node_rows_at(self, node: int, tau: int) -> np.ndarray:
        """Rows of one node at one time step: its state and dual entries plus
        the input entries when the step carries an input."""
        rows: list[np.ndarray] = []
        s_local = _local_block(self.state_nodes, self.state_offsets, node)
        if s_local is not None:
            for base in (self.state_slice(tau).start, self.dual_slice(tau).start):
                rows.append(np.arange(base + s_local.start, base + s_local.stop))
        if tau < self.horizon:
            i_local = _local_block(self.input_nodes, self.input_offsets, node)
            if i_local is not None and i_local.stop > i_local.start:
                base = self.input_slice(tau).start
                rows.append(np.arange(base + i_local.start, base + i_local.stop))
        if not rows:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(rows)


def _local_block(nodes: tuple[int, ...], offsets: np.ndarray, node: int) -> slice | None:
    try:
        k = nodes.index(node)
    except ValueError:
        return None
    return slice(int(offsets[k]), int(offsets[k + 1]))


@dataclass(frozen=True)
class KktSystem:
    """Assembled saddle matrix, right-hand side, and its index map."""

    H: np.ndarray
    b: np.ndarray
    index: KktIndex


@dataclass
class _LocalData:
    """Problem arrays in solve coordinates (full or reduced)."""

    A: np.ndarray
    B: np.ndarray
    n: int
    m: int
    ell: int
    x: np.ndarray
    zeta: list[np.ndarray]
    state_rows: list[tuple[NodeCost, ...]]  # length ell + 1; last row is the terminal grid
    input_rows: list[tuple[NodeCost, ...]]
    fixed_state: np.ndarray | None
    index: KktIndex


def _restrict(row: Sequence[NodeCost], nodes: tuple[int, ...]) -> tuple[NodeCost, ...]:
    return tuple(row[j] for j in nodes)


def _local_data(problem: OcpProblem, log=None) -> _LocalData:
    g = problem.system.graph
    s, ell = problem.start_time, problem.horizon
    ts = problem.support
    if ts is None:
        state_nodes = tuple(range(g.node_count))
        input_nodes = state_nodes
        A = np.asarray(problem.system.A)
        B = np.asarray(problem.system.B)
        s_off, i_off = g.state_offsets, g.input_offsets
    else:
        state_nodes, input_nodes = ts.state_nodes, ts.input_nodes
        s_idx = node_indices(state_nodes, g.state_offsets)
        i_idx = node_indices(input_nodes, g.input_offsets)
        A = problem.system.A[np.ix_(s_idx, s_idx)]
        B = problem.system.B[np.ix_(s_idx, i_idx)]
        s_off = block_offsets([g.state_dims[j] for j in state_nodes])
        i_off = block_offsets([g.input_dims[j] for j in input_nodes])
        if log is not None:
            log.note_local_read(s, ts.center, "A", state_nodes)
            log.note_local_read(s, ts.center, "B", input_nodes)

    n, m = int(s_off[-1]), int(i_off[-1])
    x = np.asarray(problem.init_state, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"initial state has shape {x.shape}, expected ({n},)")
    zeta = [np.asarray(z, dtype=float) for z in problem.disturbances]
    for z in zeta:
        if z.shape != (n,):
            raise ValueError(f"disturbance has shape {z.shape}, expected ({n},)")

    sched = problem.schedule
    fixed = isinstance(problem.terminal, FixedTerminal)
    state_rows = [_restrict(sched.state_costs[s + tau], state_nodes) for tau in range(ell)]
    if fixed:
        state_rows.append(_restrict(sched.state_costs[s + ell], state_nodes))
        fixed_state = np.asarray(problem.terminal.state, dtype=float)
        if fixed_state.shape != (n,):
            raise ValueError("fixed terminal state has the wrong dimension")
    else:
        state_rows.append(_restrict(problem.terminal.costs, state_nodes))
        fixed_state = None
    input_rows = [_restrict(sched.input_costs[s + tau], input_nodes) for tau in range(ell)]
    if log is not None and ts is not None:
        log.note_local_read(s, ts.center, "state_cost", state_nodes)
        log.note_local_read(s, ts.center, "input_cost", input_nodes)

    index = KktIndex(
        horizon=ell,
        n=n,
        m=m,
        fixed_terminal=fixed,
        state_nodes=state_nodes,
        input_nodes=input_nodes,
        state_offsets=s_off,
        input_offsets=i_off,
    )
    return _LocalData(
        A=A, B=B, n=n, m=m, ell=ell, x=x, zeta=zeta,
        state_rows=state_rows, input_rows=input_rows,
        fixed_state=fixed_state, index=index,
    )


def _jacobian(data: _LocalData) -> np.ndarray:
    idx = data.index
    J = np.zeros((idx.n_dual, idx.n_primal))
    n = data.n
    J[0:n, idx.state_slice(0)] = np.eye(n)
    for tau in range(data.ell):
        r = slice((tau + 1) * n, (tau + 2) * n)
        J[r, idx.state_slice(tau)] = -data.A
        if data.m:
            J[r, idx.input_slice(tau)] = -data.B
        J[r, idx.state_slice(tau + 1)] = np.eye(n)
    if idx.fixed_terminal:
        r = slice((data.ell + 1) * n, (data.ell + 2) * n)
        J[r, idx.state_slice(data.ell)] = np.eye(n)
    return J


def _constraint_rhs(data: _LocalData) -> np.ndarray:
    parts = [data.x, *data.zeta]
    if data.fixed_state is not None:
        parts.append(data.fixed_state)
    return np.concatenate(parts)


def _curvature(data: _LocalData, z: np.ndarray) -> np.ndarray:
    idx = data.index
    G = np.zeros((idx.n_primal, idx.n_primal))
    for tau in range(data.ell + 1):
        sl = idx.state_slice(tau)
        G[sl, sl] = grid_hessian(data.state_rows[tau], z[sl], data.index.state_offsets)
        if tau < data.ell and data.m:
            sl = idx.input_slice(tau)
            G[sl, sl] = grid_hessian(data.input_rows[tau], z[sl], data.index.input_offsets)
    return G


def _cost_gradient(data: _LocalData, z: np.ndarray) -> np.ndarray:
    idx = data.index
    out = np.zeros(idx.n_primal)
    for tau in range(data.ell + 1):
        sl = idx.state_slice(tau)
        out[sl] = grid_grad(data.state_rows[tau], z[sl], data.index.state_offsets)
        if tau < data.ell and data.m:
            sl = idx.input_slice(tau)
            out[sl] = grid_grad(data.input_rows[tau], z[sl], data.index.input_offsets)
    return out


def _assemble(data: _LocalData, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Saddle matrix at the linearization point, the Jacobian, and constraint rhs."""
    J = _jacobian(data)
    G = _curvature(data, z)
    dim = data.index.dim
    H = np.zeros((dim, dim))
    np_ = data.index.n_primal
    H[:np_, :np_] = G
    H[:np_, np_:] = J.T
    H[np_:, :np_] = J
    return H, J, _constraint_rhs(data)


def build_kkt(problem: OcpProblem, linearization_point: np.ndarray | None = None) -> KktSystem:
    """Assemble the saddle system with curvature taken at the given primal point.

    The zero vector (the first Newton iterate) is the default; for quadratic
    costs the curvature block does not depend on the point at all.
    """
    data = _local_data(problem)
    z = np.zeros(data.index.n_primal) if linearization_point is None else np.asarray(
        linearization_point, dtype=float
    )
    if z.shape != (data.index.n_primal,):
        raise ValueError(
            f"linearization point has shape {z.shape}, expected ({data.index.n_primal},)"
        )
    H, _, b_c = _assemble(data, z)
    b = np.concatenate([np.zeros(data.index.n_primal), b_c])
    return KktSystem(H=H, b=b, index=data.index)


# --- linear algebra ---------------------------------------------------------


def _permutation(index: KktIndex):
    """Time-interleaved symmetric permutation and the exact band limits.

    New order: y_0, l_0, then (v_tau, l_{tau+1}, y_{tau+1}) per step, with the
    terminal-pin dual block last.  Couplings then stay within a band whose
    width is computed from the block extents.  Returns the permutation
    (new position -> old index), the new block offsets, and (kl, ku).
    """
    idx = index
    order: list[np.ndarray] = []
    pos: dict[str, int] = {}
    at = 0

    def put(name: str, sl: slice):
        nonlocal at
        pos[name] = at
        order.append(np.arange(sl.start, sl.stop))
        at += sl.stop - sl.start

    put("y0", idx.state_slice(0))
    put("l0", idx.dual_slice(0))
    for tau in range(idx.horizon):
        if idx.m:
            put(f"v{tau}", idx.input_slice(tau))
        put(f"l{tau + 1}", idx.dual_slice(tau + 1))
        put(f"y{tau + 1}", idx.state_slice(tau + 1))
    if idx.fixed_terminal:
        put(f"l{idx.horizon + 1}", idx.dual_slice(idx.horizon + 1))

    spans: list[tuple[str, str]] = [("l0", "y0")]
    for tau in range(idx.horizon):
        spans.append((f"l{tau + 1}", f"y{tau}"))
        if idx.m:
            spans.append((f"l{tau + 1}", f"v{tau}"))
        spans.append((f"l{tau + 1}", f"y{tau + 1}"))
    if idx.fixed_terminal:
        spans.append((f"l{idx.horizon + 1}", f"y{idx.horizon}"))

    sizes = {"y": idx.n, "v": idx.m, "l": idx.n}
    band = 0
    for a, b in spans:
        ea = pos[a] + sizes[a[0]] - 1
        eb = pos[b] + sizes[b[0]] - 1
        band = max(band, ea - pos[b], eb - pos[a])
    return np.concatenate(order), pos, band, band


class _DenseOperator:
    """Full saddle matrix with an LU factorization, for small problems."""

    def __init__(self, data: _LocalData, z: np.ndarray):
        self.H, _, _ = _assemble(data, z)
        try:
            with warnings.catch_warnings():
                # a zero pivot is reported as SingularKktError below
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                self._lu = scipy.linalg.lu_factor(self.H)
        except (ValueError, scipy.linalg.LinAlgError) as exc:
            raise SingularKktError(str(exc)) from exc
        diag = np.abs(np.diag(self._lu[0]))
        if diag.size and diag.min() <= 1e-14 * max(diag.max(), 1.0):
            raise SingularKktError("zero pivot in saddle factorization")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.H @ x

    def raw_solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, rhs)


class _BandedOperator:
    """Saddle system assembled straight into banded storage.

    Blocks are scattered into the LAPACK general-band layout in the
    permuted (time-interleaved) ordering; factorization and solves run
    through gbtrf/gbtrs, and the unfactored band supplies matrix-vector
    products for refinement without a dense matrix ever existing.
    """

    def __init__(self, data: _LocalData, z: np.ndarray):
        idx = data.index
        perm, pos, kl, ku = _permutation(idx)
        dim = idx.dim
        inv = np.empty_like(perm)
        inv[perm] = np.arange(dim)
        self._perm, self._inv = perm, inv
        self._kl, self._ku, self._dim = kl, ku, dim
        off = kl + ku
        ab = np.zeros((2 * kl + ku + 1, dim))

        def put(r0: int, c0: int, M: np.ndarray):
            if M.size == 0:
                return
            rows = off + (r0 + np.arange(M.shape[0]))[:, None] - (
                c0 + np.arange(M.shape[1])
            )[None, :]
            ab[rows, (c0 + np.arange(M.shape[1]))[None, :]] = M

        n, m, ell = data.n, data.m, data.ell
        eye = np.eye(n)
        for tau in range(ell + 1):
            zy = z[idx.state_slice(tau)]
            put(pos[f"y{tau}"], pos[f"y{tau}"],
                grid_hessian(data.state_rows[tau], zy, idx.state_offsets))
            if tau < ell and m:
                zv = z[idx.input_slice(tau)]
                put(pos[f"v{tau}"], pos[f"v{tau}"],
                    grid_hessian(data.input_rows[tau], zv, idx.input_offsets))
        put(pos["l0"], pos["y0"], eye)
        put(pos["y0"], pos["l0"], eye)
        for tau in range(ell):
            lr = pos[f"l{tau + 1}"]
            put(lr, pos[f"y{tau}"], -data.A)
            put(pos[f"y{tau}"], lr, -data.A.T)
            if m:
                put(lr, pos[f"v{tau}"], -data.B)
                put(pos[f"v{tau}"], lr, -data.B.T)
            put(lr, pos[f"y{tau + 1}"], eye)
            put(pos[f"y{tau + 1}"], lr, eye)
        if idx.fixed_terminal:
            lr = pos[f"l{ell + 1}"]
            put(lr, pos[f"y{ell}"], eye)
            put(pos[f"y{ell}"], lr, eye)

        self._ab = ab
        gbtrf, self._gbtrs = scipy.linalg.get_lapack_funcs(("gbtrf", "gbtrs"), (ab,))
        self._lu, self._piv, info = gbtrf(ab, kl, ku)
        if info != 0:
            raise SingularKktError(f"banded factorization failed (info={info})")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        xp = x[self._perm]
        y = np.zeros_like(xp)
        ab, off, n = self._ab, self._kl + self._ku, self._dim
        for o in range(-self._kl, self._ku + 1):
            row = ab[off - o]
            if o >= 0:
                y[: n - o] += row[o:] * xp[o:]
            else:
                y[-o:] += row[: n + o] * xp[: n + o]
        return y[self._inv]

    def raw_solve(self, rhs: np.ndarray) -> np.ndarray:
        x, info = self._gbtrs(self._lu, self._kl, self._ku, rhs[self._perm], self._piv)
        if info != 0:
            raise SingularKktError(f"banded back-substitution failed (info={info})")
        return x[self._inv]


def _make_operator(data: _LocalData, z: np.ndarray):
    if data.index.dim > _BAND_THRESHOLD:
        return _BandedOperator(data, z)
    return _DenseOperator(data, z)


def _solve_refined(op, rhs: np.ndarray) -> np.ndarray:
    q = op.raw_solve(rhs)
    if not np.all(np.isfinite(q)):
        raise SingularKktError("non-finite solution from saddle factorization")
    scale = max(1.0, float(np.linalg.norm(rhs)))
    for _ in range(_REFINE_STEPS):
        r = rhs - op.matvec(q)
        if float(np.linalg.norm(r)) <= 1e-13 * scale:
            break
        q = q + op.raw_solve(r)
    return q


# --- solve ------------------------------------------------------------------


def _is_quadratic(data: _LocalData) -> bool:
    rows = data.state_rows + data.input_rows
    return all(cost.scale == 0.0 for row in rows for cost in row)


def _dyn_apply(data: _LocalData, z: np.ndarray) -> np.ndarray:
    """Constraint map J z, computed blockwise."""
    idx = data.index
    parts = [z[idx.state_slice(0)]]
    for tau in range(data.ell):
        nxt = z[idx.state_slice(tau + 1)] - data.A @ z[idx.state_slice(tau)]
        if data.m:
            nxt = nxt - data.B @ z[idx.input_slice(tau)]
        parts.append(nxt)
    if idx.fixed_terminal:
        parts.append(z[idx.state_slice(data.ell)])
    return np.concatenate(parts)


def _dyn_apply_t(data: _LocalData, lam: np.ndarray) -> np.ndarray:
    """Adjoint map J' lam, computed blockwise."""
    idx = data.index
    n = data.n
    out = np.zeros(idx.n_primal)
    for tau in range(data.ell + 1):
        acc = lam[tau * n : (tau + 1) * n].copy()
        if tau < data.ell:
            acc -= data.A.T @ lam[(tau + 1) * n : (tau + 2) * n]
        if tau == data.ell and idx.fixed_terminal:
            acc += lam[(data.ell + 1) * n : (data.ell + 2) * n]
        out[idx.state_slice(tau)] = acc
        if tau < data.ell and data.m:
            out[idx.input_slice(tau)] = -data.B.T @ lam[(tau + 1) * n : (tau + 2) * n]
    return out


def _kkt_residual_vec(data: _LocalData, b_c: np.ndarray, z: np.ndarray,
                      lam: np.ndarray) -> np.ndarray:
    top = _cost_gradient(data, z) + _dyn_apply_t(data, lam)
    return np.concatenate([top, _dyn_apply(data, z) - b_c])


def _extract(data: _LocalData, q: np.ndarray, residual: float, iters: int) -> OcpSolution:
    idx = data.index
    z, lam = q[: idx.n_primal], q[idx.n_primal :]
    states = tuple(z[idx.state_slice(tau)].copy() for tau in range(data.ell + 1))
    inputs = tuple(z[idx.input_slice(tau)].copy() for tau in range(data.ell))
    n_rows = data.ell + 1 + (1 if idx.fixed_terminal else 0)
    duals = tuple(lam[r * data.n : (r + 1) * data.n].copy() for r in range(n_rows))
    dyn = 0.0
    for tau in range(data.ell):
        gap = states[tau + 1] - data.A @ states[tau] - data.zeta[tau]
        if data.m:
            gap = gap - data.B @ inputs[tau]
        dyn = max(dyn, float(np.linalg.norm(gap)))
    return OcpSolution(
        states=states,
        inputs=inputs,
        duals=duals,
        kkt_residual=residual,
        newton_iters=iters,
        dyn_residual=dyn,
        state_nodes=idx.state_nodes,
        input_nodes=idx.input_nodes,
        state_offsets=idx.state_offsets,
        input_offsets=idx.input_offsets,
    )


def solve(problem: OcpProblem, log=None) -> OcpSolution:
    """Solve to stationarity: one factorization for quadratic costs, undamped
    Newton on the nonlinear residual otherwise."""
    data = _local_data(problem, log)
    idx = data.index
    b_c = _constraint_rhs(data)
    if _is_quadratic(data):
        op = _make_operator(data, np.zeros(idx.n_primal))
        rhs = np.concatenate([np.zeros(idx.n_primal), b_c])
        q = _solve_refined(op, rhs)
        res = float(np.linalg.norm(
            _kkt_residual_vec(data, b_c, q[: idx.n_primal], q[idx.n_primal :])
        ))
        return _extract(data, q, res, 0)

    z = np.zeros(idx.n_primal)
    lam = np.zeros(idx.n_dual)
    r = _kkt_residual_vec(data, b_c, z, lam)
    res = float(np.linalg.norm(r))
    for it in range(1, NEWTON_MAX_ITERS + 1):
        op = _make_operator(data, z)
        dq = _solve_refined(op, -r)
        z = z + dq[: idx.n_primal]
        lam = lam + dq[idx.n_primal :]
        r = _kkt_residual_vec(data, b_c, z, lam)
        new_res = float(np.linalg.norm(r))
        if new_res <= KKT_TOL:
            return _extract(data, np.concatenate([z, lam]), new_res, it)
        if new_res >= res:
            raise NewtonDivergenceError("residual stopped decreasing", new_res, it)
        res = new_res
    raise NewtonDivergenceError("no convergence", res, NEWTON_MAX_ITERS)


def solve_truncated(problem: OcpProblem, ts: TruncationSet, log=None) -> OcpSolution:
    """Reduce a full problem onto a truncation set and solve it there.

    The reduced dynamics keep only the block rows of the set's state nodes,
    so states outside it stay pinned at zero and the solve touches no data
    beyond the set (reads are recorded on ``log`` when given).
    """
    if problem.support is not None:
        raise ValueError("problem is already truncated")
    g = problem.system.graph
    s_idx = node_indices(ts.state_nodes, g.state_offsets)
    x_red = np.asarray(problem.init_state, dtype=float)[s_idx]
    zeta_red = tuple(np.asarray(z, dtype=float)[s_idx] for z in problem.disturbances)
    terminal = problem.terminal
    if isinstance(terminal, FixedTerminal):
        terminal = FixedTerminal(state=np.asarray(terminal.state)[s_idx])
    if log is not None:
        log.note_local_read(problem.start_time, ts.center, "state", ts.state_nodes)
        log.note_local_read(problem.start_time, ts.center, "disturbance", ts.state_nodes)
    reduced = replace(
        problem,
        init_state=x_red,
        disturbances=zeta_red,
        terminal=terminal,
        support=ts,
    )
    return solve(reduced, log)


def popt_check(solution: OcpSolution, problem: OcpProblem) -> float:
    """Re-solve from the first predicted state one step later and report the
    largest mismatch against the original tail, which optimality of the
    nested subproblem drives to solver noise."""
    if not isinstance(problem.terminal, FreeTerminal):
        raise ValueError("optimality-shift check applies to free-terminal solves")
    if problem.horizon < 2:
        raise ValueError("needs horizon >= 2")
    child = replace(
        problem,
        start_time=problem.start_time + 1,
        horizon=problem.horizon - 1,
        init_state=solution.states[1].copy(),
        disturbances=problem.disturbances[1:],
    )
    child_sol = solve(child)
    worst = 0.0
    for tau in range(problem.horizon):
        worst = max(
            worst, float(np.linalg.norm(solution.states[tau + 1] - child_sol.states[tau]))
        )
    return worst
