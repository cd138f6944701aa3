"""Distance-threshold interference graphs and the threshold sweep."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

# offset added to each pairwise distance so the strict "<" test includes it
THRESHOLD_EPS = 1e-9


class NotCliquePartitionedError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InterferenceGraph:
    adjacency: np.ndarray
    threshold_d: Union[float, str] = "explicit"

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(np.diag(adj)):
            raise ValueError("interference graph must be irreflexive")
        if not np.array_equal(adj, adj.T):
            raise ValueError("interference graph must be symmetric")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "InterferenceGraph":
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v:
                raise ValueError("self loops are not allowed")
            adj[u, v] = adj[v, u] = True
        return cls(adj, "explicit")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(iu.tolist(), ju.tolist()))

    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edge_key(self) -> bytes:
        return np.packbits(self.adjacency).tobytes()

    def same_edges(self, other: "InterferenceGraph") -> bool:
        return np.array_equal(self.adjacency, other.adjacency)

    def neighbor_masks(self) -> list[int]:
        """Neighbourhoods as integer bitmasks (bit ``j`` set when adjacent)."""
        masks = []
        for row in self.adjacency:
            m = 0
            for j in np.flatnonzero(row):
                m |= 1 << int(j)
            masks.append(m)
        return masks

    def to_adjacency_text(self) -> str:
        lines = [f"{i}: " + " ".join(str(j) for j in sorted(neighbors(self, i)))
                 for i in range(self.n)]
        return "\n".join(lines) + "\n"

    def to_edge_csv(self) -> str:
        buf = io.StringIO()
        buf.write("u,v\n")
        for u, v in self.edges():
            buf.write(f"{u},{v}\n")
        return buf.getvalue()


def bs_distances(scenario) -> np.ndarray:
    bs = scenario.bs_positions()
    return np.linalg.norm(bs[:, None, :] - bs[None, :, :], axis=-1)


def build_graph(scenario, d: float) -> InterferenceGraph:
    """Edge between two cells iff their BSs are strictly closer than ``d``."""
    if d < 0:
        raise ValueError("threshold must be non-negative")
    dist = bs_distances(scenario)
    adj = dist < d
    np.fill_diagonal(adj, False)
    return InterferenceGraph(adj, float(d))


def candidate_thresholds(scenario) -> list[float]:
    """One threshold per distinct distance-threshold graph, ascending.

    Distances that produce identical edge sets are collapsed by comparing
    the graphs themselves rather than the floating point distances.
    """
    dist = bs_distances(scenario)
    n = dist.shape[0]
    iu = np.triu_indices(n, 1)
    values = np.unique(dist[iu])
    out = [0.0]
    prev = build_graph(scenario, 0.0)
    for v in values:
        d = float(v) + THRESHOLD_EPS
        g = build_graph(scenario, d)
        if not g.same_edges(prev):
            out.append(d)
            prev = g
    return out


def candidate_graphs(scenario) -> list[InterferenceGraph]:
    return [build_graph(scenario, d) for d in candidate_thresholds(scenario)]


def neighbors(graph: InterferenceGraph, i: int) -> set[int]:
    return set(np.flatnonzero(graph.adjacency[i]).tolist())


def degrees(graph: InterferenceGraph) -> np.ndarray:
    return graph.adjacency.sum(axis=1)


def max_degree(graph: InterferenceGraph) -> int:
    return int(degrees(graph).max()) if graph.n else 0


def connected_components(graph: InterferenceGraph) -> list[list[int]]:
    seen = np.zeros(graph.n, dtype=bool)
    comps = []
    for start in range(graph.n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.flatnonzero(graph.adjacency[u]):
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        comps.append(sorted(comp))
    return comps


def clique_density(graph: InterferenceGraph) -> float:
    """Average neighbour count ``n/H - 1`` of a union of H equal cliques."""
    comps = connected_components(graph)
    sizes = {len(c) for c in comps}
    if len(sizes) > 1:
        raise NotCliquePartitionedError("not clique-partitioned: component sizes differ")
    for comp in comps:
        sub = graph.adjacency[np.ix_(comp, comp)]
        if sub.sum() != len(comp) * (len(comp) - 1):
            raise NotCliquePartitionedError("not clique-partitioned: component is not a clique")
    return graph.n / len(comps) - 1.0


def graph_from_adjacency_text(text: str, n: Optional[int] = None) -> InterferenceGraph:
    """Inverse of :meth:`InterferenceGraph.to_adjacency_text`."""
    rows = {}
    for line in text.strip().splitlines():
        head, _, rest = line.partition(":")
        rows[int(head)] = [int(t) for t in rest.split()]
    size = n if n is not None else len(rows)
    edges = [(u, v) for u, vs in rows.items() for v in vs if u < v]
    return InterferenceGraph.from_edges(size, edges)
