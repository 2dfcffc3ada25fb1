"""Tests for the MST, component and cluster-extraction helpers."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scvcm.exceptions import DimensionMismatch, DuplicateLocation, IndexOutOfRange, TooFewPoints
from scvcm.graph import (
    Partition,
    connected_components,
    crossing_edges,
    euclidean_mst,
    identified_clusters,
    spaneigh_true_clusters,
)

PROPS = settings(max_examples=100, deadline=None)

# nine points on a slightly jittered line; labels put {0,1} and {5,6} in the same
# region, but the run 2..4 of another region sits between them
NINE = np.array([[0.0, 0.0], [1.0, 0.1], [2.1, 0.0], [3.0, 0.2], [4.2, 0.0],
                 [5.0, 0.1], [6.1, 0.0], [7.0, 0.2], [8.2, 0.0]])
NINE_REGIONS = Partition(np.array([0, 0, 1, 1, 1, 0, 0, 2, 2]))


def is_spanning_tree(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri == rj:
            return False
        parent[ri] = rj
    return len(edges) == n - 1 and len({find(v) for v in range(n)}) == 1


def brute_mst_weight(coords):
    """Minimum over every (n-1)-subset of the complete graph that is a tree."""
    n = len(coords)
    pairs = list(itertools.combinations(range(n), 2))
    w = {e: float(np.hypot(*(coords[e[0]] - coords[e[1]]))) for e in pairs}
    return min(sum(w[e] for e in sub) for sub in itertools.combinations(pairs, n - 1)
               if is_spanning_tree(n, sub))


point_sets = st.integers(2, 40).flatmap(
    lambda n: st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=n, max_size=n,
                       unique=True)
).map(lambda pts: np.array(pts, dtype=float))


# ====================================================================
# euclidean_mst
# ====================================================================


class TestEuclideanMst:
    def test_two_points(self):
        mst = euclidean_mst([[0, 0], [1, 0]])
        assert mst.edges.tolist() == [[0, 1]]
        assert mst.total_weight == 1.0

    def test_three_collinear_points(self):
        """Of the three spanning trees, the chain 0-1-2 is lightest (weight 3)."""
        mst = euclidean_mst([[0, 0], [1, 0], [3, 0]])
        assert sorted(map(tuple, mst.edges.tolist())) == [(0, 1), (1, 2)]
        assert mst.total_weight == pytest.approx(3.0)

    def test_unit_square_ties_are_lexicographic(self):
        mst = euclidean_mst([[0, 0], [1, 0], [0, 1], [1, 1]])
        assert mst.edges.tolist() == [[0, 1], [0, 2], [1, 3]]

    def test_deterministic(self, rng):
        pts = rng.random((60, 2))
        a, b = euclidean_mst(pts), euclidean_mst(pts)
        assert np.array_equal(a.edges, b.edges)

    def test_duplicate_rejected(self):
        with pytest.raises(DuplicateLocation):
            euclidean_mst([[0, 0], [1, 1], [0, 0]])

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            euclidean_mst([[0.5, 0.5]])

    def test_laplacian_and_incidence_agree(self, rng):
        mst = euclidean_mst(rng.random((15, 2)))
        D = mst.incidence()
        assert np.allclose((D.T @ D).toarray(), mst.laplacian().toarray())
        assert np.allclose(mst.laplacian().sum(axis=1), 0.0)

    def test_cached_matrices_are_not_shared(self, rng):
        mst = euclidean_mst(rng.random((6, 2)))
        lap = mst.laplacian()
        lap.data[:] = 0.0
        assert mst.laplacian().sum() == 0.0 and abs(mst.laplacian()).sum() > 0


# ====================================================================
# components and cluster construction
# ====================================================================


class TestConnectedComponents:
    def test_no_edges(self):
        assert connected_components(3, []).cluster_count == 3

    def test_two_pairs(self):
        part = connected_components(4, [(0, 1), (2, 3)])
        assert part == Partition(np.array([0, 0, 1, 1]))

    def test_bad_endpoint(self):
        with pytest.raises(IndexOutOfRange):
            connected_components(3, [(0, 3)])


class TestSpaneigh:
    def test_split_region_gives_four_clusters(self):
        mst = euclidean_mst(NINE)
        part = spaneigh_true_clusters(NINE_REGIONS, mst)
        assert part.cluster_count == 4
        assert sorted(map(list, part.clusters())) == [[0, 1], [2, 3, 4], [5, 6], [7, 8]]

    def test_crossing_edges_of_split_layout(self):
        mst = euclidean_mst(NINE)
        part = spaneigh_true_clusters(NINE_REGIONS, mst)
        cross = mst.edges[crossing_edges(part, mst)]
        assert sorted(map(tuple, cross.tolist())) == [(1, 2), (4, 5), (6, 7)]

    def test_identity_when_connected(self):
        mst = euclidean_mst(NINE)
        regions = Partition(np.array([0, 0, 0, 0, 1, 1, 1, 1, 1]))
        assert spaneigh_true_clusters(regions, mst) == regions

    def test_single_region(self, rng):
        mst = euclidean_mst(rng.random((20, 2)))
        assert spaneigh_true_clusters(Partition(np.zeros(20, int)), mst).cluster_count == 1

    def test_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            spaneigh_true_clusters(Partition(np.zeros(3, int)), euclidean_mst(NINE))


class TestIdentifiedClusters:
    def test_all_zero_is_one_cluster(self):
        mst = euclidean_mst(NINE)
        assert identified_clusters(np.zeros((8, 3)), mst).cluster_count == 1

    def test_no_zero_is_singletons(self):
        mst = euclidean_mst(NINE)
        assert identified_clusters(np.ones((8, 3)), mst).cluster_count == 9

    def test_zero_on_within_region_edges_recovers_truth(self):
        mst = euclidean_mst(NINE)
        truth = spaneigh_true_clusters(NINE_REGIONS, mst)
        eta = crossing_edges(truth, mst).astype(float)[:, None] * np.array([[0.3, -0.2]])
        assert identified_clusters(eta, mst) == truth

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            identified_clusters(np.zeros((3, 2)), euclidean_mst(NINE))


class TestPartition:
    def test_canonical_labels(self):
        assert Partition(np.array([7, 7, 2, 9, 2])).labels.tolist() == [0, 0, 1, 2, 1]

    @pytest.mark.parametrize("fine, coarse, expected", [
        ([0, 0, 1, 2], [0, 0, 1, 1], True),
        ([0, 0, 1, 1], [0, 0, 1, 2], False),
        ([0, 1, 2, 3], [0, 0, 0, 0], True),
    ])
    def test_refines(self, fine, coarse, expected):
        assert Partition(np.array(fine)).refines(Partition(np.array(coarse))) is expected


# ====================================================================
# invariants
# ====================================================================


@pytest.mark.invariant
class TestGraphInvariants:
    @PROPS
    @given(point_sets)
    def test_mst_is_spanning_tree(self, pts):
        mst = euclidean_mst(pts)
        assert mst.n_edges == len(pts) - 1
        assert is_spanning_tree(len(pts), mst.edges)
        assert np.allclose(mst.weights, np.linalg.norm(pts[mst.edges[:, 0]] - pts[mst.edges[:, 1]], axis=1))

    @PROPS
    @given(st.integers(2, 6).flatmap(
        lambda n: st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=n, max_size=n,
                           unique=True)))
    def test_mst_weight_is_minimal(self, pts):
        pts = np.array(pts)
        assert euclidean_mst(pts).total_weight == pytest.approx(brute_mst_weight(pts), abs=1e-12)

    @PROPS
    @given(point_sets, st.integers(0, 2**31 - 1))
    def test_spaneigh_idempotent_and_refining(self, pts, seed):
        n = len(pts)
        labels = np.random.default_rng(seed).integers(0, 3, n)
        mst = euclidean_mst(pts)
        region = Partition(labels)
        out = spaneigh_true_clusters(region, mst)
        assert spaneigh_true_clusters(out, mst) == out
        assert out.refines(region)
        assert out.cluster_count >= region.cluster_count

    @PROPS
    @given(point_sets, st.integers(0, 2**31 - 1))
    def test_identified_clusters_tolerance_limits(self, pts, seed):
        rng = np.random.default_rng(seed)
        mst = euclidean_mst(pts)
        eta = rng.normal(size=(mst.n_edges, 2)) * (rng.random(mst.n_edges) < 0.5)[:, None]
        assert identified_clusters(eta, mst, zero_tol=np.inf).cluster_count == 1
        norms = np.linalg.norm(eta, axis=1)
        positive = norms[norms > 0]
        tol = positive.min() / 2 if positive.size else 1.0
        expected = connected_components(mst.n, mst.edges[norms == 0])
        assert identified_clusters(eta, mst, zero_tol=tol) == expected
