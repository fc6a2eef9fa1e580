"""Exact pairwise-connectivity scoring and top-k spanner selection.

Connectivity counts use ordered pairs, so a component of size ``s``
contributes ``s * (s - 1)``. Halving every value gives the unordered
convention; rankings are unchanged.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import InvalidEdgeError, InvalidKError, InvalidPairError, ParseError
from .graph import Graph, connected_components, induced_subgraph_without

PAIR_CONVENTION = "ordered"


@dataclass(frozen=True, order=True)
class ConnectivityScore:
    node: int
    score: int


@dataclass(frozen=True)
class ShsResult:
    spanners: list[int]
    residual_connectivity: int

    def labels(self, n: int) -> list[int]:
        out = [0] * n
        for v in self.spanners:
            out[v] = 1
        return out


def pairwise_connectivity(g: Graph, i: int, j: int) -> int:
    if i == j:
        raise InvalidPairError(f"pairwise connectivity undefined for i == j ({i})")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise InvalidEdgeError(f"pair ({i}, {j}) out of range for n={g.n}")
    comp = connected_components(g).component_id
    return int(comp[i] == comp[j])


def total_pairwise_connectivity(g: Graph) -> int:
    return sum(s * (s - 1) for s in connected_components(g).component_sizes)


def _score_in_component(adj: list[list[int]], j: int, size: int) -> int:
    # Removing j only splits j's own component; every other component
    # contributes identically to P(G) and P(G \ {j}).
    seen = {j}
    remaining = 0
    for s in adj[j]:
        if s in seen:
            continue
        seen.add(s)
        queue = [s]
        for u in queue:
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        t = len(queue)
        remaining += t * (t - 1)
    return size * (size - 1) - remaining


def connectivity_score(g: Graph, j: int) -> ConnectivityScore:
    if not 0 <= j < g.n:
        raise InvalidEdgeError(f"node {j} out of range for n={g.n}")
    labeling = connected_components(g)
    size = labeling.component_sizes[labeling.component_id[j]]
    return ConnectivityScore(j, _score_in_component(g._adj, j, size))


def _scores(g: Graph, nodes: range | list[int], comp: list[int], sizes: list[int]) -> list[int]:
    adj = g._adj
    return [_score_in_component(adj, j, sizes[comp[j]]) for j in nodes]


def score_all_nodes(g: Graph, workers: int = 1) -> list[ConnectivityScore]:
    """Connectivity score of every node, in node-id order.

    With ``workers > 1`` the nodes are split into contiguous chunks scored on
    a thread pool; output is identical for any worker count.
    """
    labeling = connected_components(g)
    comp, sizes = labeling.component_id, labeling.component_sizes
    n = g.n
    if workers <= 1 or n < 2:
        values = _scores(g, range(n), comp, sizes)
    else:
        step = -(-n // workers)
        chunks = [range(a, min(a + step, n)) for a in range(0, n, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda r: _scores(g, r, comp, sizes), chunks)
            values = [v for part in parts for v in part]
    return [ConnectivityScore(i, v) for i, v in enumerate(values)]


def _rank(values: list[int]) -> list[int]:
    # highest score first, lower id wins ties
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def _check_k(g: Graph, k: int) -> None:
    if k < 1 or k > g.n:
        raise InvalidKError(f"k must satisfy 1 <= k <= n={g.n}, got {k}")


def label_top_k(g: Graph, k: int, workers: int = 1) -> ShsResult:
    """One-shot ground truth: the k highest static scores, no re-scoring between picks."""
    _check_k(g, k)
    values = [s.score for s in score_all_nodes(g, workers)]
    chosen = _rank(values)[:k]
    residual = total_pairwise_connectivity(induced_subgraph_without(g, chosen))
    return ShsResult(chosen, residual)


def greedy_top_k(g: Graph, k: int, workers: int = 1) -> ShsResult:
    """Greedy heuristic: take the argmax-score node, isolate it, re-score, repeat k times."""
    _check_k(g, k)
    current = g.copy()
    chosen: list[int] = []
    taken = [False] * g.n
    for _ in range(k):
        values = [s.score for s in score_all_nodes(current, workers)]
        best = max((i for i in range(g.n) if not taken[i]), key=lambda i: (values[i], -i))
        chosen.append(best)
        taken[best] = True
        current = induced_subgraph_without(current, [best])
    return ShsResult(chosen, total_pairwise_connectivity(current))


def format_labels(labels: list[int]) -> str:
    return "".join(f"{i} {int(v)}\n" for i, v in enumerate(labels))


def write_labels(labels: list[int], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_labels(labels))


def read_labels(path, n: int | None = None) -> list[int]:
    """Read ``<node-id> <0|1>`` lines; every node 0..n-1 must appear exactly once."""
    found: dict[int, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("0", "1"):
                raise ParseError(f"expected '<node-id> <0|1>', got {line!r}", lineno)
            try:
                node = int(parts[0])
            except ValueError:
                raise ParseError(f"bad node id {parts[0]!r}", lineno) from None
            if node < 0 or node in found:
                raise ParseError(f"invalid or repeated node id {node}", lineno)
            found[node] = int(parts[1])
    size = len(found) if n is None else n
    if sorted(found) != list(range(size)):
        raise ParseError(f"labels must cover nodes 0..{size - 1} exactly once")
    return [found[i] for i in range(size)]
