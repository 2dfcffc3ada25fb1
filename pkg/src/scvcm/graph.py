"""Euclidean minimum spanning tree and partition utilities.

Vertices are 0-based row indices into the coordinate array. Edges are
stored with ``i < j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .exceptions import (
    DimensionMismatch,
    DuplicateLocation,
    IndexOutOfRange,
    TooFewPoints,
    ValidationError,
)

DEFAULT_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class Partition:
    """Cluster labels for one covariate.

    Labels are canonical: ``0..cluster_count-1`` numbered in order of first
    appearance, so two equal partitions compare equal label-for-label.
    """

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValidationError("partition labels must be one-dimensional")
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        canon = order[inverse.ravel()].astype(np.int64)
        canon.setflags(write=False)
        object.__setattr__(self, "labels", canon)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def cluster_count(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def clusters(self) -> list[np.ndarray]:
        """Member indices of each cluster, in label order."""
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(np.bincount(self.labels, minlength=self.cluster_count))[:-1]
        return np.split(order, bounds)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.cluster_count)

    def refines(self, other: "Partition") -> bool:
        """True if every cluster of ``self`` lies inside one cluster of ``other``."""
        return all(np.unique(other.labels[c]).size == 1 for c in self.clusters())

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.labels, other.labels))

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(n={self.n}, clusters={self.cluster_count})"


@dataclass(frozen=True)
class MstGraph:
    n: int
    edges: np.ndarray  # (n-1, 2) int, i < j
    weights: np.ndarray  # (n-1,)
    adjacency: list = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.adjacency is None:
            adj = [[] for _ in range(self.n)]
            for i, j in self.edges:
                adj[i].append(int(j))
                adj[j].append(int(i))
            object.__setattr__(self, "adjacency", [np.array(a, dtype=np.int64) for a in adj])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def laplacian(self) -> sp.csr_matrix:
        return self._laplacian.copy()

    def incidence(self) -> sp.csr_matrix:
        """Signed edge-vertex incidence, +1 at ``i`` and -1 at ``j``."""
        return self._incidence.copy()

    @cached_property
    def _laplacian(self) -> sp.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        m = self.n_edges
        adj = sp.coo_matrix((np.ones(2 * m), (np.r_[i, j], np.r_[j, i])), shape=(self.n, self.n))
        deg = np.bincount(np.r_[i, j], minlength=self.n).astype(float)
        return (sp.diags(deg) - adj).tocsr()

    @cached_property
    def _incidence(self) -> sp.csr_matrix:
        m = self.n_edges
        rows = np.r_[np.arange(m), np.arange(m)]
        cols = np.r_[self.edges[:, 0], self.edges[:, 1]]
        vals = np.r_[np.ones(m), -np.ones(m)]
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n))


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def _as_coords(locations) -> np.ndarray:
    coords = np.asarray(locations, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError("locations must be an (n, 2) array of planar coordinates")
    if not np.all(np.isfinite(coords)):
        raise ValidationError("location coordinates must be finite")
    return coords


def check_distinct(coords: np.ndarray) -> None:
    uniq = np.unique(coords, axis=0)
    if uniq.shape[0] != coords.shape[0]:
        raise DuplicateLocation("two or more locations share identical coordinates")


def euclidean_mst(locations) -> MstGraph:
    """Kruskal's algorithm over the complete Euclidean graph.

    Ties in edge weight are broken lexicographically on ``(weight, i, j)``,
    which makes the tree deterministic for gridded inputs.
    """
    coords = _as_coords(locations)
    n = coords.shape[0]
    if n < 2:
        raise TooFewPoints(f"need at least 2 locations, got {n}")
    check_distinct(coords)

    iu, ju = np.triu_indices(n, k=1)
    iu = iu.astype(np.int32)
    ju = ju.astype(np.int32)
    diff = coords[iu] - coords[ju]
    w = np.hypot(diff[:, 0], diff[:, 1])
    del diff
    order = np.lexsort((ju, iu, w))

    uf = _UnionFind(n)
    chosen = []
    for e in order:
        if uf.union(int(iu[e]), int(ju[e])):
            chosen.append(e)
            if len(chosen) == n - 1:
                break
    chosen = np.asarray(chosen, dtype=np.int64)
    edges = np.column_stack([iu[chosen], ju[chosen]]).astype(np.int64)
    return MstGraph(n=n, edges=edges, weights=w[chosen])


def _check_edges(n: int, edges) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise IndexOutOfRange(f"edge endpoint outside 0..{n - 1}")
    return edges


def connected_components(n: int, edges) -> Partition:
    """Partition of ``0..n-1`` into components of the undirected graph."""
    edges = _check_edges(n, edges)
    if edges.shape[0] == 0:
        return Partition(np.arange(n))
    g = sp.coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(n, n)
    ).tocsr()
    _, labels = _cc(g, directed=False)
    return Partition(labels)


def spaneigh_true_clusters(true_partition: Partition, mst: MstGraph) -> Partition:
    """Refine a partition by MST connectivity.

    Keeps only MST edges whose endpoints share a label, and returns the
    connected components of that subgraph.
    """
    labels = true_partition.labels
    if labels.size != mst.n:
        raise DimensionMismatch("partition size does not match the MST vertex count")
    keep = labels[mst.edges[:, 0]] == labels[mst.edges[:, 1]]
    return connected_components(mst.n, mst.edges[keep])


def identified_clusters(eta, mst: MstGraph, zero_tol: float = DEFAULT_ZERO_TOL) -> Partition:
    """Clusters read off the fused edges (``||eta_e|| <= zero_tol``)."""
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 1:
        eta = eta[:, None]
    if eta.shape[0] != mst.n_edges:
        raise DimensionMismatch(f"expected {mst.n_edges} edge vectors, got {eta.shape[0]}")
    fused = np.linalg.norm(eta, axis=1) <= zero_tol
    return connected_components(mst.n, mst.edges[fused])


def crossing_edges(partition: Partition, mst: MstGraph) -> np.ndarray:
    """Boolean mask of MST edges joining two different clusters."""
    lab = partition.labels
    return lab[mst.edges[:, 0]] != lab[mst.edges[:, 1]]
