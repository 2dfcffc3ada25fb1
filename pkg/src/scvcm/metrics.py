"""Evaluation metrics: coefficient MSE, Rand index, cluster counts."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .exceptions import ShapeMismatch
from .graph import MstGraph, Partition, crossing_edges


def mse_beta(estimated, truth) -> np.ndarray:
    """Per-covariate mean squared error over locations."""
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ShapeMismatch(f"estimate {est.shape} vs truth {tru.shape}")
    if est.ndim == 1:
        return np.array([np.mean((est - tru) ** 2)])
    return np.mean((est - tru) ** 2, axis=0)


def _pairs(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def rand_index(identified: Partition, truth: Partition) -> float:
    """Fraction of location pairs on which the two partitions agree.

    Uses the contingency table, so cost is linear in ``n`` plus the table size.
    """
    if identified.n != truth.n:
        raise ShapeMismatch(f"partitions cover {identified.n} and {truth.n} locations")
    n = identified.n
    if n < 2:
        return 1.0
    table = sp.coo_matrix(
        (np.ones(n), (identified.labels, truth.labels)),
        shape=(identified.cluster_count, truth.cluster_count),
    ).tocsr()
    table.sum_duplicates()
    both = _pairs(table.data).sum()
    same_a = _pairs(identified.sizes()).sum()
    same_b = _pairs(truth.sizes()).sum()
    total = n * (n - 1) / 2
    # agreements: same in both + different in both
    return float((total + 2 * both - same_a - same_b) / total)


def cluster_count(identified: Partition) -> int:
    return identified.cluster_count


def min_signal_difference(truth_coefficients, partition: Partition, mst: MstGraph) -> float:
    """Smallest coefficient gap across MST edges that join different clusters.

    ``truth_coefficients`` is ``(n, L)`` (or ``(n,)``) for one covariate.
    Returns ``inf`` when no edge crosses clusters.
    """
    a = np.asarray(truth_coefficients, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] != mst.n or partition.n != mst.n:
        raise ShapeMismatch("coefficients, partition and MST disagree on n")
    cross = crossing_edges(partition, mst)
    if not cross.any():
        return float("inf")
    e = mst.edges[cross]
    return float(np.linalg.norm(a[e[:, 0]] - a[e[:, 1]], axis=1).min())
