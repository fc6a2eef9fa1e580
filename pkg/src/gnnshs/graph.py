"""Undirected simple graph over a fixed node set ``0..n-1``.

Only edges change over time; node ids never move, so labels, features and
predictions stay aligned across snapshots.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

from .errors import InvalidEdgeError, ParseError


class Graph:
    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()) -> None:
        if n < 0:
            raise ValueError(f"node count must be non-negative, got {n}")
        self._n = int(n)
        self._adj: list[list[int]] = [[] for _ in range(self._n)]
        self._m = 0
        for i, j in edges:
            self.add_edge(i, j)

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return self._m

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={self._m})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._adj == other._adj

    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self._n and 0 <= j < self._n):
            raise InvalidEdgeError(f"edge ({i}, {j}) out of range for n={self._n}")

    def add_edge(self, i: int, j: int) -> bool:
        """Insert edge {i, j}. Returns False if it was already present."""
        i, j = int(i), int(j)
        self._check(i, j)
        if i == j:
            raise InvalidEdgeError(f"self-loop ({i}, {i}) not allowed")
        row = self._adj[i]
        pos = bisect.bisect_left(row, j)
        if pos < len(row) and row[pos] == j:
            return False
        row.insert(pos, j)
        bisect.insort(self._adj[j], i)
        self._m += 1
        return True

    def remove_edge(self, i: int, j: int) -> bool:
        """Delete edge {i, j}. Returns False if it was absent."""
        i, j = int(i), int(j)
        self._check(i, j)
        row = self._adj[i]
        pos = bisect.bisect_left(row, j)
        if pos == len(row) or row[pos] != j:
            return False
        del row[pos]
        other = self._adj[j]
        del other[bisect.bisect_left(other, i)]
        self._m -= 1
        return True

    def has_edge(self, i: int, j: int) -> bool:
        if not (0 <= i < self._n and 0 <= j < self._n):
            return False
        row = self._adj[i]
        pos = bisect.bisect_left(row, j)
        return pos < len(row) and row[pos] == j

    def neighbors(self, i: int) -> list[int]:
        """Sorted neighbor list of ``i``. Do not mutate the returned list."""
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(r) for r in self._adj), dtype=np.int64, count=self._n)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Edges as (i, j) with i < j, in lexicographic order."""
        for i, row in enumerate(self._adj):
            for j in row[bisect.bisect_right(row, i):]:
                yield i, j

    def copy(self) -> "Graph":
        g = Graph(self._n)
        g._adj = [list(r) for r in self._adj]
        g._m = self._m
        return g

    def adjacency_matrix(self) -> sp.csr_matrix:
        """0/1 adjacency as CSR with sorted column indices."""
        indptr = np.zeros(self._n + 1, dtype=np.int64)
        np.cumsum([len(r) for r in self._adj], out=indptr[1:])
        indices = np.fromiter(
            (j for r in self._adj for j in r), dtype=np.int64, count=int(indptr[-1])
        )
        data = np.ones(len(indices), dtype=np.float64)
        return sp.csr_matrix((data, indices, indptr), shape=(self._n, self._n))


@dataclass(frozen=True)
class ComponentLabeling:
    component_id: list[int]
    component_sizes: list[int]

    @property
    def count(self) -> int:
        return len(self.component_sizes)


def connected_components(g: Graph) -> ComponentLabeling:
    """Label components by BFS in node-id order; isolated nodes are size-1 components."""
    n = g.n
    comp = [-1] * n
    sizes: list[int] = []
    adj = g._adj
    for s in range(n):
        if comp[s] != -1:
            continue
        cid = len(sizes)
        comp[s] = cid
        queue = [s]
        for u in queue:
            for w in adj[u]:
                if comp[w] == -1:
                    comp[w] = cid
                    queue.append(w)
        sizes.append(len(queue))
    return ComponentLabeling(comp, sizes)


def induced_subgraph_without(g: Graph, removed: Iterable[int]) -> Graph:
    """Copy of ``g`` with every node in ``removed`` isolated (ids are kept)."""
    drop = set(int(v) for v in removed)
    for v in drop:
        if not 0 <= v < g.n:
            raise InvalidEdgeError(f"node {v} out of range for n={g.n}")
    out = Graph(g.n)
    adj = out._adj
    m2 = 0
    for i, row in enumerate(g._adj):
        if i in drop:
            continue
        kept = [j for j in row if j not in drop]
        adj[i] = kept
        m2 += len(kept)
    out._m = m2 // 2
    return out


def read_edge_list(path: str | Path) -> Graph:
    """Parse the ``n <count>`` + ``i j`` per line format. Duplicate edges collapse."""
    n: int | None = None
    pending: list[tuple[int, int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "n":
                if len(parts) != 2 or n is not None:
                    raise ParseError(f"bad header {line!r}", lineno)
                try:
                    n = int(parts[1])
                except ValueError:
                    raise ParseError(f"bad node count {parts[1]!r}", lineno) from None
                if n < 0:
                    raise ParseError("negative node count", lineno)
                continue
            if len(parts) != 2:
                raise ParseError(f"expected two node ids, got {line!r}", lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {line!r}", lineno) from None
            pending.append((i, j, lineno))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in pending), default=-1)
    g = Graph(n)
    for i, j, lineno in pending:
        if i < 0 or j < 0 or i >= n or j >= n:
            raise InvalidEdgeError(f"line {lineno}: edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise InvalidEdgeError(f"line {lineno}: self-loop ({i}, {i})")
        g.add_edge(i, j)
    return g


def format_edge_list(g: Graph, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"n {g.n}")
    lines.extend(f"{i} {j}" for i, j in g.edges())
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path: str | Path, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(g, comment))
