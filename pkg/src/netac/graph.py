"""Undirected interaction graphs and their k-hop neighbourhoods."""
from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence


class InteractionGraph:
    """Undirected graph on agents ``0..n-1``.

    ``neighbors[i]`` is the sorted tuple N_i, which always contains ``i``.
    """

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        if n < 1:
            raise ValueError("graph needs at least one agent")
        self.n = int(n)
        adj = [{i} for i in range(self.n)]
        for e in edges:
            u, v = (int(x) for x in e)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has a node outside [0, {n})")
            adj[u].add(v)
            adj[v].add(u)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in adj)
        self._khop_cache: dict[tuple[int, int], tuple[int, ...]] = {}

    @classmethod
    def from_neighbor_sets(cls, sets: Sequence[Iterable[int]]) -> "InteractionGraph":
        """Build from explicit N_i sets, rejecting asymmetric or self-less input."""
        n = len(sets)
        sets = [set(int(j) for j in s) for s in sets]
        for i, s in enumerate(sets):
            if i not in s:
                raise ValueError(f"N_{i} must contain {i}")
            for j in s:
                if not 0 <= j < n:
                    raise ValueError(f"N_{i} contains out-of-range node {j}")
                if i not in sets[j]:
                    raise ValueError(f"asymmetric neighbourhoods: {j} in N_{i} but {i} not in N_{j}")
        edges = [(i, j) for i, s in enumerate(sets) for j in s if j > i]
        return cls(n, edges)

    @classmethod
    def line(cls, n: int) -> "InteractionGraph":
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def grid(cls, rows: int, cols: int) -> "InteractionGraph":
        """4-connected grid, agents numbered row-major."""
        edges = []
        for r in range(rows):
            for c in range(cols):
                k = r * cols + c
                if c + 1 < cols:
                    edges.append((k, k + 1))
                if r + 1 < rows:
                    edges.append((k, k + cols))
        return cls(rows * cols, edges)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in self.neighbors[i] if j > i]

    def distances_from(self, i: int) -> list[int]:
        """BFS hop distances from ``i``; unreachable nodes get -1."""
        self._check(i)
        dist = [-1] * self.n
        dist[i] = 0
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def kappa_neighborhood(self, i: int, kappa: int) -> tuple[int, ...]:
        if kappa < 0:
            raise ValueError("kappa must be nonnegative")
        key = (i, kappa)
        if key not in self._khop_cache:
            dist = self.distances_from(i)
            self._khop_cache[key] = tuple(j for j in range(self.n) if 0 <= dist[j] <= kappa)
        return self._khop_cache[key]

    def complement(self, i: int, kappa: int) -> tuple[int, ...]:
        inside = set(self.kappa_neighborhood(i, kappa))
        return tuple(j for j in range(self.n) if j not in inside)

    def diameter(self) -> int:
        """Largest finite hop distance (disconnected pairs are ignored)."""
        return max(max(self.distances_from(i)) for i in range(self.n))

    def _check(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"agent {i} out of range [0, {self.n})")

    def __eq__(self, other) -> bool:
        return isinstance(other, InteractionGraph) and self.neighbors == other.neighbors

    def __repr__(self) -> str:
        return f"InteractionGraph(n={self.n}, edges={self.edges})"


def kappa_neighborhood(graph: InteractionGraph, i: int, kappa: int) -> tuple[int, ...]:
    return graph.kappa_neighborhood(i, kappa)
