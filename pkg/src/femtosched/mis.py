"""Maximal independent sets: exact enumeration and the coloring-based subset.

Sets are returned as sorted tuples of 0-based vertex indices. All tie-breaks
go to the lowest vertex index so every caller sees the same ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graph import InterferenceGraph

EXACT_VERTEX_CAP = 25
EXACT_COUNT_CAP = 10**6


class ExactModeLimitError(RuntimeError):
    """Graph too large for exhaustive enumeration; use approximate mode."""


@dataclass(frozen=True)
class MisSet:
    sets: tuple[tuple[int, ...], ...]
    mode: str
    coloring_size: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("exact", "approximate"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "approximate" and self.coloring_size is None:
            raise ValueError("approximate MIS sets need the coloring size")

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __getitem__(self, j):
        return self.sets[j]

    def membership(self, n: int) -> np.ndarray:
        """Boolean ``(n, s)`` matrix: UE ``i`` belongs to set ``j``."""
        m = np.zeros((n, len(self.sets)), dtype=bool)
        for j, s in enumerate(self.sets):
            m[list(s), j] = True
        return m

    def to_json(self) -> str:
        return json.dumps([list(s) for s in self.sets])


def is_independent(graph: InterferenceGraph, vertices) -> bool:
    v = list(vertices)
    return not graph.adjacency[np.ix_(v, v)].any() if v else True


def is_maximal_independent(graph: InterferenceGraph, vertices) -> bool:
    """Oracle used by the tests and by internal assertions."""
    v = set(vertices)
    if not is_independent(graph, v):
        return False
    for u in range(graph.n):
        if u not in v and not any(graph.adjacency[u, w] for w in v):
            return False
    return True


def _bits(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def enumerate_all_mis(graph: InterferenceGraph, limit: int = EXACT_COUNT_CAP,
                      vertex_cap: int = EXACT_VERTEX_CAP) -> MisSet:
    """All maximal independent sets via pivoting Bron-Kerbosch on the complement.

    Maximal independent sets of G are the maximal cliques of its complement,
    so the recursion works with non-neighbourhoods.
    """
    n = graph.n
    if n > vertex_cap:
        raise ExactModeLimitError(
            f"{n} vertices exceed the exact-mode cap of {vertex_cap}; use approximate mode")
    full = (1 << n) - 1
    nbr = graph.neighbor_masks()
    # complement neighbourhoods: everything except self and graph neighbours
    cnb = [full & ~nbr[v] & ~(1 << v) for v in range(n)]
    found: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p and not x:
            found.append(r)
            if len(found) > limit:
                raise ExactModeLimitError(
                    f"more than {limit} maximal independent sets; use approximate mode")
            return
        # pivot maximising |P ∩ N(u)| over P ∪ X
        px = p | x
        best, pivot = -1, 0
        m = px
        while m:
            low = m & -m
            u = low.bit_length() - 1
            c = bin(p & cnb[u]).count("1")
            if c > best:
                best, pivot = c, u
            m ^= low
        cand = p & ~cnb[pivot]
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            expand(r | low, p & cnb[v], x & cnb[v])
            p &= ~low
            x |= low
            cand ^= low

    if n == 0:
        return MisSet((), "exact")
    expand(0, full, 0)
    sets = sorted(_bits(r) for r in found)
    return MisSet(tuple(sets), "exact")


def brute_force_mis(graph: InterferenceGraph) -> list[tuple[int, ...]]:
    """All MISs by filtering every subset; independent reference for tests."""
    n = graph.n
    out = []
    for mask in range(1, 1 << n):
        s = _bits(mask)
        if is_maximal_independent(graph, s):
            out.append(s)
    return sorted(out)


def smallest_last_order(graph: InterferenceGraph) -> list[int]:
    """Vertices in smallest-last order (last removed first)."""
    n = graph.n
    deg = graph.adjacency.sum(axis=1).astype(int)
    alive = np.ones(n, dtype=bool)
    removed = []
    for _ in range(n):
        cand = np.flatnonzero(alive)
        v = int(cand[np.argmin(deg[cand])])
        removed.append(v)
        alive[v] = False
        deg[graph.adjacency[v] & alive] -= 1
    return removed[::-1]


def color_graph(graph: InterferenceGraph) -> list[int]:
    """Greedy coloring in smallest-last order; colors are ``0..C-1``."""
    colors = [-1] * graph.n
    for v in smallest_last_order(graph):
        used = {colors[u] for u in np.flatnonzero(graph.adjacency[v]) if colors[u] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return colors


def color_classes(colors: Sequence[int]) -> list[tuple[int, ...]]:
    k = max(colors) + 1 if colors else 0
    return [tuple(v for v, c in enumerate(colors) if c == col) for col in range(k)]


def extend_to_mis(graph: InterferenceGraph, independent_set, weights) -> tuple[int, ...]:
    """Greedy augmentation: add the heaviest remaining non-adjacent vertex until maximal."""
    current = set(independent_set)
    if not is_independent(graph, current):
        raise ValueError("input set is not independent")
    w = np.asarray(weights, dtype=float)
    adj = graph.adjacency
    blocked = set(current)
    for v in current:
        blocked.update(np.flatnonzero(adj[v]).tolist())
    remaining = [v for v in range(graph.n) if v not in blocked]
    while remaining:
        # decreasing weight, lowest index on ties
        remaining.sort(key=lambda v: (-w[v], v))
        v = remaining[0]
        current.add(v)
        remaining = [u for u in remaining[1:] if not adj[v, u]]
    return tuple(sorted(current))


def _max_weight_is_exact(graph: InterferenceGraph, w: np.ndarray) -> tuple[int, ...]:
    n = graph.n
    nbr = graph.neighbor_masks()
    best = [-1.0, 0]
    tol = 1e-12 * max(1.0, float(np.abs(w).sum()))

    def bound(cand: int) -> float:
        total = 0.0
        while cand:
            low = cand & -cand
            total += w[low.bit_length() - 1]
            cand ^= low
        return total

    def search(chosen: int, weight: float, cand: int) -> None:
        if not cand:
            if weight > best[0] + tol:
                best[0], best[1] = weight, chosen
            return
        if weight + bound(cand) <= best[0] + tol:
            return
        low = cand & -cand
        v = low.bit_length() - 1
        # include-first so the first optimum found is lexicographically smallest
        search(chosen | low, weight + w[v], cand & ~low & ~nbr[v])
        search(chosen, weight, cand & ~low)

    search(0, 0.0, (1 << n) - 1)
    return _bits(best[1])


def approx_max_weight_mis(graph: InterferenceGraph, weights,
                          exact_cap: int = EXACT_VERTEX_CAP) -> tuple[tuple[int, ...], Optional[float]]:
    """Max-weight MIS: branch and bound up to ``exact_cap`` vertices, greedy beyond.

    Returns ``(set, eta)`` where ``eta`` is 0.0 for the exact search and
    ``None`` (unknown approximation factor) for the greedy fallback.
    """
    w = np.asarray(weights, dtype=float)
    if graph.n <= exact_cap:
        s = _max_weight_is_exact(graph, w)
        eta: Optional[float] = 0.0
    else:
        s = ()
        eta = None
    return extend_to_mis(graph, s, w), eta


def approx_mis_subset(graph: InterferenceGraph, weights,
                      exact_cap: int = EXACT_VERTEX_CAP) -> MisSet:
    """C color-class MISs followed by the (approximate) max-weight MIS."""
    colors = color_graph(graph)
    classes = color_classes(colors)
    sets = [extend_to_mis(graph, cls, weights) for cls in classes]
    heavy, _ = approx_max_weight_mis(graph, weights, exact_cap)
    sets.append(heavy)
    return MisSet(tuple(sets), "approximate", coloring_size=len(classes))


def mis_power_profiles(mis_set: MisSet, p_max) -> np.ndarray:
    """Row ``j``: members of set ``j`` at full power, everybody else silent."""
    p_max = np.asarray(p_max, dtype=float)
    out = np.zeros((len(mis_set), p_max.shape[0]))
    for j, s in enumerate(mis_set):
        assert len(s) > 0, "empty maximal independent set"
        out[j, list(s)] = p_max[list(s)]
    return out


def compute_mis_set(graph: InterferenceGraph, mode: str, weights=None) -> MisSet:
    if mode == "exact":
        return enumerate_all_mis(graph)
    if mode == "approximate":
        if weights is None:
            raise ValueError("approximate mode needs vertex weights")
        return approx_mis_subset(graph, weights)
    raise ValueError(f"unknown MIS mode {mode!r}")
