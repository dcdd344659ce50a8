"""Weighted digraph of the exosystem (node 0) plus N follower agents.

Edges are (tail, head, weight) with positive weights; an edge (j, i)
means agent i can read information from node j.  The Laplacian is
degree-minus-adjacency with in-degrees on the diagonal, and the
partition splits it into leader / informed / uninformed blocks with the
informed agents occupying indices 1..l.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonzeroLeaderRow
from .numerics import as_matrix, matrix_rank, spectrum


@dataclass(frozen=True)
class Digraph:
    """Digraph on nodes {0, ..., node_count-1}; node 0 is the exosystem."""

    node_count: int
    edges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be at least 1")
        seen = set()
        norm = []
        for e in self.edges:
            tail, head, weight = int(e[0]), int(e[1]), float(e[2])
            if tail == head:
                raise ValueError(f"self-loop at node {tail}")
            if not (0 <= tail < self.node_count and 0 <= head < self.node_count):
                raise ValueError(f"edge ({tail},{head}) out of range")
            if weight <= 0:
                raise ValueError(f"edge ({tail},{head}) has non-positive weight")
            if (tail, head) in seen:
                raise ValueError(f"duplicate edge ({tail},{head})")
            seen.add((tail, head))
            norm.append((tail, head, weight))
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def agent_count(self) -> int:
        return self.node_count - 1

    def neighbors(self, i: int) -> list:
        """Tail nodes of edges heading into node i."""
        return [t for (t, h, _) in self.edges if h == i]


@dataclass(frozen=True)
class LaplacianPartition:
    """Blocks of the Laplacian for l informed and N-l uninformed agents."""

    l: int
    L21: np.ndarray
    L22: np.ndarray
    L23: np.ndarray
    L31: np.ndarray
    L32: np.ndarray
    L33: np.ndarray


@dataclass(frozen=True)
class PartitionDiagnostics:
    """Cross-check of follower-block invertibility against reachability."""

    l33_nonsingular: bool
    min_real_part: float | None
    reachable_from_leader: bool
    consistent: bool
    note: str = ""


def adjacency(g: Digraph) -> np.ndarray:
    """Weighted adjacency: entry (i, j) is the weight of edge (j, i)."""
    a = np.zeros((g.node_count, g.node_count))
    for tail, head, weight in g.edges:
        a[head, tail] = weight
    return a


def laplacian(g: Digraph) -> np.ndarray:
    """In-degree matrix minus adjacency; every row sums to zero."""
    a = adjacency(g)
    return np.diag(a.sum(axis=1)) - a


def partition(lap, l: int) -> LaplacianPartition:
    """Slice the Laplacian into leader / informed / uninformed blocks.

    Requires the leader row to be identically zero, i.e. node 0 receives
    no edges.
    """
    lap = as_matrix(lap, "laplacian")
    n_nodes = lap.shape[0]
    if lap.shape[0] != lap.shape[1]:
        raise ValueError("laplacian must be square")
    if not 0 <= l <= n_nodes - 1:
        raise ValueError(f"informed count {l} out of range for {n_nodes - 1} agents")
    if np.any(lap[0, :] != 0.0):
        raise NonzeroLeaderRow("node 0 must not receive edges")
    inf = slice(1, 1 + l)
    uni = slice(1 + l, n_nodes)
    return LaplacianPartition(
        l=l,
        L21=lap[inf, 0:1].copy(),
        L22=lap[inf, inf].copy(),
        L23=lap[inf, uni].copy(),
        L31=lap[uni, 0:1].copy(),
        L32=lap[uni, inf].copy(),
        L33=lap[uni, uni].copy(),
    )


def rooted_spanning_tree_exists(g: Digraph) -> bool:
    """True iff every node is reachable from node 0 along directed edges."""
    out = {i: [] for i in range(g.node_count)}
    for tail, head, _ in g.edges:
        out[tail].append(head)
    seen = {0}
    stack = [0]
    while stack:
        node = stack.pop()
        for nxt in out[node]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == g.node_count


def partition_diagnostics(part: LaplacianPartition, g: Digraph) -> PartitionDiagnostics:
    """Report follower-block invertibility next to the reachability check.

    Graph reachability is the authoritative test; the algebraic check on
    the uninformed block corroborates it under the informed-first node
    ordering, so disagreement is flagged as a warning rather than an error.
    """
    l33 = part.L33
    if l33.shape[0] == 0:
        nonsingular = True
        min_re = None
    else:
        nonsingular = matrix_rank(l33) == l33.shape[0]
        min_re = float(spectrum(l33).real.min())
    reachable = rooted_spanning_tree_exists(g)
    consistent = nonsingular == reachable
    note = "" if consistent else (
        "follower-block invertibility disagrees with leader reachability; "
        "trusting the graph search"
    )
    return PartitionDiagnostics(
        l33_nonsingular=nonsingular,
        min_real_part=min_re,
        reachable_from_leader=reachable,
        consistent=consistent,
        note=note,
    )
