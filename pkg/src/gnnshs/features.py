"""Ego-network node features: effective size, efficiency and degree."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import Graph

COLUMNS = ("effective_size", "efficiency", "degree")


def _ego_edge_count(g: Graph, i: int) -> int:
    nbrs = g.neighbors(i)
    members = set(nbrs)
    # each neighbor-neighbor edge is seen from both of its endpoints
    return sum(1 for u in nbrs for w in g.neighbors(u) if w in members) // 2


def effective_size(g: Graph, i: int) -> float:
    """Borgatti's unweighted form ``d - 2t/d``; ``t`` counts edges among the neighbors."""
    d = g.degree(i)
    if d == 0:
        return 0.0
    return d - 2.0 * _ego_edge_count(g, i) / d


def efficiency(g: Graph, i: int) -> float:
    d = g.degree(i)
    if d == 0:
        return 0.0
    return effective_size(g, i) / d


@dataclass
class FeatureMatrix:
    values: np.ndarray
    col_min: np.ndarray = field(default=None)  # type: ignore[assignment]
    col_max: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.col_min is None or self.col_max is None:
            if len(self.values):
                self.col_min = self.values.min(axis=0)
                self.col_max = self.values.max(axis=0)
            else:
                self.col_min = np.zeros(self.values.shape[1])
                self.col_max = np.zeros(self.values.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_stats(self, col_min: np.ndarray, col_max: np.ndarray) -> "FeatureMatrix":
        """Same raw values, normalization statistics taken from elsewhere (e.g. the training graph)."""
        return FeatureMatrix(self.values, np.asarray(col_min, float), np.asarray(col_max, float))


def build_features(g: Graph, adjacency: sp.csr_matrix | None = None) -> FeatureMatrix:
    """Raw feature rows ``[effective_size, efficiency, degree]`` for every node.

    Triangle counts come from ``diag(A^3) / 2`` on the sparse adjacency, which
    matches :func:`effective_size` node by node.
    """
    a = g.adjacency_matrix() if adjacency is None else adjacency
    n = a.shape[0]
    deg = np.diff(a.indptr).astype(np.float64)
    tri = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    out = np.zeros((n, 3))
    nz = deg > 0
    es = np.zeros(n)
    es[nz] = deg[nz] - 2.0 * tri[nz] / deg[nz]
    out[:, 0] = es
    out[nz, 1] = es[nz] / deg[nz]
    out[:, 2] = deg
    return FeatureMatrix(out)


def normalize(fm: FeatureMatrix) -> np.ndarray:
    """Min-max scale each column with the stored stats, clamped to [0, 1].

    Constant columns (max == min) map to 0.
    """
    span = fm.col_max - fm.col_min
    safe = np.where(span > 0, span, 1.0)
    scaled = (fm.values - fm.col_min) / safe
    scaled[:, span <= 0] = 0.0
    return np.clip(scaled, 0.0, 1.0)
