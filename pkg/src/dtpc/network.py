"""Graph topology, hop neighbourhoods, and block-row truncation.

Nodes carry per-node state and input dimensions; every block-structured
matrix or vector in the package is indexed by this graph.  Truncation keeps
the block rows of a set of nodes and drops everything else, stored in
reduced dimension together with the index map back to full coordinates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

UNREACHABLE = np.inf


def block_offsets(dims: Sequence[int]) -> np.ndarray:
    """Flat-index offsets of consecutive per-node blocks (length ``len(dims)+1``)."""
    out = np.zeros(len(dims) + 1, dtype=np.int64)
    np.cumsum(np.asarray(dims, dtype=np.int64), out=out[1:])
    return out


def node_indices(nodes: Iterable[int], offsets: np.ndarray) -> np.ndarray:
    """Flat indices covering the blocks of ``nodes``, in the given node order."""
    parts = [np.arange(offsets[i], offsets[i + 1], dtype=np.int64) for i in nodes]
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)


@dataclass(frozen=True)
class NetworkGraph:
    """Immutable undirected graph with per-node block dimensions.

    ``distances[i, j]`` is the hop count of a shortest path, ``UNREACHABLE``
    for disconnected pairs.  Both the distance matrix and the edge set are
    fixed at construction; instances are safe to share across threads.
    """

    node_count: int
    state_dims: tuple[int, ...]
    input_dims: tuple[int, ...]
    edges: frozenset[tuple[int, int]]
    distances: np.ndarray

    def __post_init__(self):
        self.distances.setflags(write=False)
        object.__setattr__(self, "_state_offsets", block_offsets(self.state_dims))
        object.__setattr__(self, "_input_offsets", block_offsets(self.input_dims))
        nbrs = [[i] for i in range(self.node_count)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        object.__setattr__(
            self, "_neighbors_closed", tuple(tuple(sorted(ns)) for ns in nbrs)
        )

    @property
    def state_offsets(self) -> np.ndarray:
        return self._state_offsets

    @property
    def input_offsets(self) -> np.ndarray:
        return self._input_offsets

    @property
    def n_states(self) -> int:
        return int(self._state_offsets[-1])

    @property
    def n_inputs(self) -> int:
        return int(self._input_offsets[-1])

    def distance(self, i: int, j: int) -> float:
        return float(self.distances[i, j])

    def neighbors_closed(self, i: int) -> tuple[int, ...]:
        """The node itself plus all adjacent nodes, ascending."""
        return self._neighbors_closed[i]

    def diameter(self) -> float:
        """Largest pairwise distance; ``UNREACHABLE`` when disconnected."""
        return float(np.max(self.distances))

    def state_slice(self, i: int) -> slice:
        return slice(int(self._state_offsets[i]), int(self._state_offsets[i + 1]))

    def input_slice(self, i: int) -> slice:
        return slice(int(self._input_offsets[i]), int(self._input_offsets[i + 1]))


@dataclass(frozen=True)
class TruncationSet:
    """Node sets describing a hop-limited view centred at one node.

    ``state_nodes`` holds every node within ``radius`` hops of ``center``,
    ``boundary_nodes`` the shell at exactly ``radius`` hops, and
    ``input_nodes`` the neighbour closure of ``state_nodes`` (the nodes whose
    inputs can move a kept state through one dynamics step).  All orderings
    are ascending by node id.
    """

    center: int
    radius: int
    state_nodes: tuple[int, ...]
    input_nodes: tuple[int, ...]
    boundary_nodes: tuple[int, ...]

    def support_key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Hashable identity of the kept blocks; equal keys mean identical truncations."""
        return (self.state_nodes, self.input_nodes)


@dataclass(frozen=True)
class TruncatedVector:
    """Block rows of a full vector restricted to ``nodes``, with the embedding map."""

    values: np.ndarray
    nodes: tuple[int, ...]
    offsets: np.ndarray  # full-space block offsets

    def __post_init__(self):
        self.values.setflags(write=False)

    def embed(self) -> np.ndarray:
        full = np.zeros(int(self.offsets[-1]))
        full[node_indices(self.nodes, self.offsets)] = self.values
        return full


@dataclass(frozen=True)
class TruncatedMatrix:
    """Kept block rows (and their possible column support) of a full matrix."""

    values: np.ndarray
    row_nodes: tuple[int, ...]
    col_nodes: tuple[int, ...]
    row_offsets: np.ndarray
    col_offsets: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def embed(self) -> np.ndarray:
        full = np.zeros((int(self.row_offsets[-1]), int(self.col_offsets[-1])))
        rows = node_indices(self.row_nodes, self.row_offsets)
        cols = node_indices(self.col_nodes, self.col_offsets)
        full[np.ix_(rows, cols)] = self.values
        return full


def build_graph(
    edges: Iterable[tuple[int, int]],
    state_dims: Sequence[int],
    input_dims: Sequence[int],
) -> NetworkGraph:
    """Validate the topology and precompute all-pairs hop distances by BFS.

    Self-loops and duplicate edges are rejected; self-dependence of a node is
    carried by the diagonal blocks of the dynamics matrices, not by an edge.
    """
    n = len(state_dims)
    if len(input_dims) != n:
        raise ValueError(
            f"input_dims has {len(input_dims)} entries for {n} nodes"
        )
    if any(d < 1 for d in state_dims):
        raise ValueError("state dimensions must be positive")
    if any(d < 0 for d in input_dims):
        raise ValueError("input dimensions must be non-negative")

    canon: set[tuple[int, int]] = set()
    for a, b in edges:
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"edge ({a}, {b}) references a node outside 0..{n - 1}")
        if a == b:
            raise ValueError(f"self-loop edge on node {a}")
        pair = (min(a, b), max(a, b))
        if pair in canon:
            raise ValueError(f"duplicate edge {pair}")
        canon.add(pair)

    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in canon:
        adj[a].append(b)
        adj[b].append(a)

    dist = np.full((n, n), UNREACHABLE)
    for src in range(n):
        dist[src, src] = 0.0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[src, v] == UNREACHABLE:
                    dist[src, v] = dist[src, u] + 1.0
                    queue.append(v)

    return NetworkGraph(
        node_count=n,
        state_dims=tuple(int(d) for d in state_dims),
        input_dims=tuple(int(d) for d in input_dims),
        edges=frozenset(canon),
        distances=dist,
    )


def khop(g: NetworkGraph, i: int, kappa: int) -> TruncationSet:
    """Nodes within ``kappa`` hops of node ``i``, its boundary shell, and the
    neighbour closure supplying inputs."""
    if not 0 <= i < g.node_count:
        raise ValueError(f"node {i} outside 0..{g.node_count - 1}")
    if kappa < 0:
        raise ValueError("radius must be non-negative")
    d = g.distances[i]
    state_nodes = tuple(int(j) for j in np.flatnonzero(d <= kappa))
    boundary = tuple(int(j) for j in np.flatnonzero(d == kappa))
    inputs: set[int] = set()
    for j in state_nodes:
        inputs.update(g.neighbors_closed(j))
    return TruncationSet(
        center=i,
        radius=int(kappa),
        state_nodes=state_nodes,
        input_nodes=tuple(sorted(inputs)),
        boundary_nodes=boundary,
    )


def truncate(
    M: np.ndarray, ts: TruncationSet, g: NetworkGraph, col_space: str = "state"
) -> TruncatedVector | TruncatedMatrix:
    """Zero every block row outside ``ts.state_nodes``, stored reduced.

    For matrices the surviving rows can only touch columns of nodes adjacent
    to a kept node, so the reduced column support is ``ts.input_nodes``
    (interpreted over state or input block dimensions per ``col_space``).
    """
    M = np.asarray(M, dtype=float)
    row_off = g.state_offsets
    if M.ndim == 1:
        if M.shape[0] != g.n_states:
            raise ValueError(f"vector length {M.shape[0]} != total state dim {g.n_states}")
        rows = node_indices(ts.state_nodes, row_off)
        return TruncatedVector(values=M[rows].copy(), nodes=ts.state_nodes, offsets=row_off)
    if M.ndim != 2:
        raise ValueError("expected a block vector or block matrix")
    if col_space == "state":
        col_off = g.state_offsets
    elif col_space == "input":
        col_off = g.input_offsets
    else:
        raise ValueError(f"unknown column space {col_space!r}")
    if M.shape != (g.n_states, int(col_off[-1])):
        raise ValueError(
            f"matrix shape {M.shape} does not match blocks "
            f"({g.n_states}, {int(col_off[-1])})"
        )
    rows = node_indices(ts.state_nodes, row_off)
    cols = node_indices(ts.input_nodes, col_off)
    return TruncatedMatrix(
        values=M[np.ix_(rows, cols)].copy(),
        row_nodes=ts.state_nodes,
        col_nodes=ts.input_nodes,
        row_offsets=row_off,
        col_offsets=col_off,
    )


def mesh_edges(n: int) -> list[tuple[int, int]]:
    """Edges of an n-by-n grid; node (r, c) has id r*n + c."""
    out = []
    for r in range(n):
        for c in range(n):
            if c + 1 < n:
                out.append((r * n + c, r * n + c + 1))
            if r + 1 < n:
                out.append((r * n + c, (r + 1) * n + c))
    return out


def path_edges(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


def save_graph(path, g: NetworkGraph) -> None:
    """Write the edge-list text form: a ``nodes N`` header, one ``i n_x n_u``
    line per node, then one ``i j`` line per edge."""
    with open(path, "w") as fh:
        fh.write(f"nodes {g.node_count}\n")
        for i in range(g.node_count):
            fh.write(f"{i} {g.state_dims[i]} {g.input_dims[i]}\n")
        for a, b in sorted(g.edges):
            fh.write(f"{a} {b}\n")


def load_graph(path) -> NetworkGraph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    head = lines[0].split()
    if len(head) != 2 or head[0] != "nodes":
        raise ValueError("graph file must start with a 'nodes N' header")
    n = int(head[1])
    state_dims = [0] * n
    input_dims = [0] * n
    for ln in lines[1 : 1 + n]:
        i, nx, nu = (int(tok) for tok in ln.split())
        state_dims[i] = nx
        input_dims[i] = nu
    edges = []
    for ln in lines[1 + n :]:
        toks = ln.split()
        if len(toks) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        edges.append((int(toks[0]), int(toks[1])))
    return build_graph(edges, state_dims, input_dims)
