"""Sparsity-rank intersection geometry.

The orbit ``{Diag(u) X Diag(v)}`` of a matrix under diagonal scalings is a
smooth manifold of dimension ``n + m - c(G)``, where ``G`` is the bipartite
graph on rows and columns whose edges are the support of ``X`` and ``c``
counts connected components (isolated vertices included).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .faces import SupportPattern, support_complement
from .linalg import DEFAULT_TOL, as_matrix, numerical_rank


class UnionFind:
    def __init__(self, size):
        self.parent = list(range(size))
        self.rank = [0] * size
        self.components = size

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        # path compression
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.components -= 1
        return True


@dataclass(frozen=True)
class PatternGraph:
    """Bipartite graph: row vertices ``0..n-1``, column vertices ``n..n+m-1``."""

    row_vertices: int
    col_vertices: int
    edges: frozenset

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < self.row_vertices and 0 <= j < self.col_vertices):
                raise ValueError(f"edge {(i, j)} outside {self.row_vertices}x{self.col_vertices}")

    @classmethod
    def from_pattern(cls, pattern):
        n, m = pattern.zero_mask.shape
        edges = frozenset((int(i), int(j)) for i, j in np.argwhere(~pattern.zero_mask))
        return cls(n, m, edges)


def component_count(g):
    uf = UnionFind(g.row_vertices + g.col_vertices)
    for i, j in sorted(g.edges):
        uf.union(i, g.row_vertices + j)
    return uf.components


def manifold_dimension(pattern):
    """``n + m - c(G)`` for the support graph of ``pattern``."""
    if not isinstance(pattern, SupportPattern):
        pattern = SupportPattern(zero_mask=np.asarray(pattern, dtype=bool))
    n, m = pattern.zero_mask.shape
    return n + m - component_count(PatternGraph.from_pattern(pattern))


def orbit_differential(X):
    """Matrix of ``(v, w) -> Diag(v) X + X Diag(w)`` acting on ``R^n x R^m``."""
    X = as_matrix(X)
    n, m = X.shape
    D = np.zeros((n, m, n + m))
    for i in range(n):
        D[i, :, i] = X[i, :]
    for j in range(m):
        D[:, j, n + j] = X[:, j]
    return D.reshape(n * m, n + m)


def orbit_differential_rank(X, tol=DEFAULT_TOL):
    """Numerical rank of the differential of the diagonal-scaling orbit map."""
    s = np.linalg.svd(orbit_differential(X), compute_uv=False)
    return numerical_rank(s, tol)


def subspace_lower_bound(X, tol=DEFAULT_TOL):
    """``max(#nonzero rows, #nonzero columns)`` with zeros per ``tol.zero_abs``."""
    nz = ~support_complement(X, tol).zero_mask
    return int(max(np.count_nonzero(nz.any(axis=1)), np.count_nonzero(nz.any(axis=0))))
