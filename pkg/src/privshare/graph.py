"""Agent topologies and the graph quantities privacy depends on.

Vertex connectivity is computed with Menger's theorem on a node-split flow
network; the same unit-capacity Edmonds-Karp routine gives edge connectivity.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Edge = tuple[int, int]


class Disconnected(ValueError):
    """Raised when an operation needs a connected graph."""


class NotConnected(ValueError):
    """The requested node subset does not induce a connected subgraph."""


class InvalidMixingMatrix(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph on nodes 0..node_count-1."""

    node_count: int
    edges: frozenset[Edge]

    def __init__(self, node_count: int, edges: Iterable[Sequence[int]] = ()):
        if node_count < 1:
            raise ValueError("node_count must be positive")
        norm: set[Edge] = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise ValueError(f"edge {(i, j)} references a node outside [0, {node_count})")
            key = (min(i, j), max(i, j))
            if key in norm:
                raise ValueError(f"duplicate edge {key}")
            norm.add(key)
        object.__setattr__(self, "node_count", int(node_count))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def complete(cls, n: int) -> Topology:
        return cls(n, itertools.combinations(range(n), 2))

    @classmethod
    def path(cls, n: int) -> Topology:
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def from_json(cls, data: Mapping) -> Topology:
        try:
            return cls(int(data["nodes"]), [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed topology: {exc}") from exc

    def to_json(self) -> dict:
        return {"nodes": self.node_count, "edges": [list(e) for e in self.sorted_edges()]}

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> list[int]:
        return sorted(j for e in self.edges if i in e for j in e if j != i)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for i, j in self.sorted_edges():
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def directed_edges(self) -> list[Edge]:
        """Directed links in incidence-column order: (lo, hi) for every edge, then (hi, lo)."""
        fwd = self.sorted_edges()
        return fwd + [(j, i) for i, j in fwd]

    def components(self, over: Iterable[int] | None = None) -> list[list[int]]:
        """Connected components of the subgraph induced on ``over`` (default: all nodes)."""
        keep = set(self.nodes if over is None else over)
        adj = self.adjacency()
        seen: set[int] = set()
        comps = []
        for s in sorted(keep):
            if s in seen:
                continue
            comp, queue = [], deque([s])
            seen.add(s)
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in adj[u]:
                    if w in keep and w not in seen:
                        seen.add(w)
                        queue.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self, over: Iterable[int] | None = None) -> bool:
        return len(self.components(over)) <= 1


# -- max flow ------------------------------------------------------------------


def _max_flow(cap: dict[int, dict[int, int]], s: int, t: int, limit: int | None = None) -> int:
    """Edmonds-Karp on an integer-capacity residual dict. Mutates ``cap``."""
    flow = 0
    while limit is None or flow < limit:
        parent = {s: s}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for w, c in cap[u].items():
                if c > 0 and w not in parent:
                    parent[w] = u
                    queue.append(w)
        if t not in parent:
            break
        path_flow, w = None, t
        while w != s:
            u = parent[w]
            path_flow = cap[u][w] if path_flow is None else min(path_flow, cap[u][w])
            w = u
        w = t
        while w != s:
            u = parent[w]
            cap[u][w] -= path_flow
            cap[w].setdefault(u, 0)
            cap[w][u] += path_flow
            w = u
        flow += path_flow
    return flow


def local_vertex_connectivity(g: Topology, s: int, t: int) -> int:
    """Maximum number of internally vertex-disjoint s-t paths (s, t non-adjacent)."""
    big = g.node_count
    cap: dict[int, dict[int, int]] = {k: {} for k in range(2 * g.node_count)}
    # v_in = 2v, v_out = 2v + 1
    for v in g.nodes:
        cap[2 * v][2 * v + 1] = big if v in (s, t) else 1
    for i, j in g.edges:
        cap[2 * i + 1][2 * j] = big
        cap[2 * j + 1][2 * i] = big
    return _max_flow(cap, 2 * s + 1, 2 * t)


def vertex_connectivity(g: Topology) -> int:
    """kappa(G) via Menger: min over non-adjacent pairs of vertex-disjoint path counts."""
    if g.node_count < 2:
        raise ValueError("vertex connectivity needs at least 2 nodes")
    if not g.is_connected():
        raise Disconnected("graph is not connected")
    best = g.node_count - 1
    for s, t in itertools.combinations(g.nodes, 2):
        if not g.has_edge(s, t):
            best = min(best, local_vertex_connectivity(g, s, t))
    return best


def edge_connectivity(g: Topology) -> int:
    """lambda(G): min over t of unit-capacity max flow from node 0 to t."""
    if g.node_count < 2:
        raise ValueError("edge connectivity needs at least 2 nodes")
    if not g.is_connected():
        raise Disconnected("graph is not connected")
    best = None
    for t in range(1, g.node_count):
        cap: dict[int, dict[int, int]] = {v: {} for v in g.nodes}
        for i, j in g.edges:
            cap[i][j] = 1
            cap[j][i] = 1
        f = _max_flow(cap, 0, t)
        best = f if best is None else min(best, f)
    return best


def min_degree(g: Topology) -> int:
    return min(g.degree(v) for v in g.nodes)


def is_f_admissible(g: Topology, f: int) -> bool:
    return vertex_connectivity(g) > f


# -- incidence -------------------------------------------------------------------


@dataclass(frozen=True)
class IncidenceMatrix:
    """Signed incidence [B_C, -B_C]: column (I, J) has +1 at receiver J, -1 at sender I."""

    matrix: np.ndarray
    columns: tuple[Edge, ...]
    column_index: Mapping[Edge, int] = field(repr=False)

    def select(self, cols: Sequence[Edge]) -> np.ndarray:
        return self.matrix[:, [self.column_index[e] for e in cols]]


def incidence_matrix(g: Topology, columns: Sequence[Edge] | None = None) -> IncidenceMatrix:
    cols = tuple(g.directed_edges() if columns is None else columns)
    B = np.zeros((g.node_count, len(cols)), dtype=np.int64)
    for k, (i, j) in enumerate(cols):
        B[i, k] = -1
        B[j, k] = 1
    B.setflags(write=False)
    return IncidenceMatrix(B, cols, {e: k for k, e in enumerate(cols)})


# -- adversary-related subgraphs ---------------------------------------------------


def delete_adversary_edges(g: Topology, coalition: Iterable[int]) -> Topology:
    bad = set(coalition)
    if not bad <= set(g.nodes):
        raise ValueError(f"coalition {sorted(bad)} is not a subset of the nodes")
    return Topology(g.node_count, [e for e in g.edges if not (e[0] in bad or e[1] in bad)])


def spanning_tree(g: Topology, over: Iterable[int] | None = None) -> list[Edge]:
    """BFS tree (parent, child) over the induced subgraph on ``over``, rooted at its smallest id."""
    keep = sorted(set(g.nodes if over is None else over))
    if not keep:
        return []
    adj = g.adjacency()
    allowed = set(keep)
    root = keep[0]
    seen = {root}
    tree: list[Edge] = []
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w in allowed and w not in seen:
                seen.add(w)
                tree.append((u, w))
                queue.append(w)
    if len(seen) != len(keep):
        raise NotConnected(f"nodes {sorted(allowed - seen)} unreachable from {root}")
    return tree


@dataclass
class FailureReport:
    """Privacy-loss findings for a coalition.

    ``individual`` lists good nodes with degree below |coalition|+1. ``groups``
    lists the good-node components when removing the coalition's links splits
    them (each component's summed objective is exposed).
    """

    coalition: list[int]
    individual: list[int]
    groups: list[list[int]]

    @property
    def empty(self) -> bool:
        return not self.individual and not self.groups

    def to_json(self) -> dict:
        return {"coalition": self.coalition, "individual": self.individual, "groups": self.groups}


def detect_privacy_failures(g: Topology, coalition: Iterable[int]) -> FailureReport:
    bad = sorted(set(coalition))
    good = [v for v in g.nodes if v not in bad]
    f = len(bad)
    individual = [v for v in good if g.degree(v) < f + 1]
    comps = delete_adversary_edges(g, bad).components(good)
    groups = comps if len(comps) > 1 else []
    return FailureReport(bad, individual, groups)


# -- mixing --------------------------------------------------------------------------


@dataclass(frozen=True)
class MixingMatrix:
    entries: np.ndarray
    eta: float

    @classmethod
    def from_array(cls, entries, g: Topology, tol: float = 1e-12) -> MixingMatrix:
        W = np.array(entries, dtype=float)
        problems = check_mixing(W, g, tol)
        if problems:
            raise InvalidMixingMatrix("; ".join(problems))
        W.setflags(write=False)
        return cls(W, float(W[W > 0].min()))

    def to_json(self) -> list[list[float]]:
        return self.entries.tolist()


def check_mixing(W: np.ndarray, g: Topology, tol: float = 1e-12) -> list[str]:
    """Violations of the doubly-stochastic and sparsity invariants (empty if none)."""
    S = g.node_count
    if W.shape != (S, S):
        return [f"mixing matrix shape {W.shape} != ({S}, {S})"]
    out = []
    if np.any(W < 0):
        out.append("mixing matrix has negative entries")
    rows = np.abs(W.sum(axis=1) - 1.0)
    cols = np.abs(W.sum(axis=0) - 1.0)
    if rows.max() > tol:
        out.append(f"mixing matrix rows do not sum to 1 (max error {rows.max():.3g})")
    if cols.max() > tol:
        out.append(f"mixing matrix columns do not sum to 1 (max error {cols.max():.3g}); not doubly stochastic")
    for i in range(S):
        for j in range(S):
            allowed = i == j or g.has_edge(i, j)
            if allowed and W[i, j] <= 0:
                out.append(f"mixing entry [{i},{j}] must be positive")
            elif not allowed and W[i, j] != 0:
                out.append(f"mixing entry [{i},{j}] is nonzero but {i} and {j} are not linked")
    return out


def metropolis_mixing(g: Topology) -> MixingMatrix:
    """Metropolis-Hastings weights: 1/(1+max(deg i, deg j)) on links, remainder on the diagonal."""
    S = g.node_count
    W = np.zeros((S, S))
    deg = [g.degree(v) for v in g.nodes]
    for i, j in g.edges:
        W[i, j] = W[j, i] = 1.0 / (1 + max(deg[i], deg[j]))
    for i in range(S):
        W[i, i] = 1.0 - W[i].sum()
    return MixingMatrix.from_array(W, g)
