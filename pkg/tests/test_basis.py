"""Tests for knot selection and the normalised thin-plate basis."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from scvcm.basis import (
    build_basis,
    coverage,
    num_knots,
    radial_basis_matrix,
    select_knots_sfd,
    smoothing_matrix,
    thin_plate,
)
from scvcm.exceptions import DegenerateColumn, TooManyKnots, ValidationError

PROPS = settings(max_examples=100, deadline=None)


class TestNumKnots:
    @pytest.mark.parametrize("n, expected", [(1, 20), (40, 20), (100, 25), (163, 40), (1000, 40)])
    def test_rule(self, n, expected):
        assert num_knots(n) == expected

    def test_nonpositive(self):
        with pytest.raises(ValidationError):
            num_knots(0)


class TestThinPlate:
    def test_zero_and_one(self):
        assert thin_plate([0.0, 1.0]).tolist() == [0.0, 0.0]

    def test_at_e(self):
        assert thin_plate(np.e) == pytest.approx(np.e**2, rel=1e-15)

    def test_below_one_is_negative(self):
        assert thin_plate(0.5) == pytest.approx(0.25 * np.log(0.5))


class TestSelectKnots:
    def test_all_points(self):
        assert select_knots_sfd(np.eye(3, 2), 3).tolist() == [0, 1, 2]

    def test_single_knot_is_the_median_point(self):
        pts = np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 0.0]])
        idx = select_knots_sfd(pts, 1)
        assert pts[idx].tolist() == [[5.0, 0.0]]

    def test_single_knot_matches_enumeration(self, rng):
        pts = rng.random((30, 2))
        best = min(range(30), key=lambda i: coverage(pts, pts[[i]]))
        assert select_knots_sfd(pts, 1).tolist() == [best]

    def test_grid_cover(self):
        g = (np.arange(20) + 0.5) / 20
        pts = np.array(list(itertools.product(g, g)))
        knots = pts[select_knots_sfd(pts, 4)]
        assert cdist(pts, knots).min(axis=1).max() <= 0.5

    def test_swap_descent_no_worse_than_any_single_swap(self, rng):
        pts = rng.random((40, 2))
        idx = select_knots_sfd(pts, 5)
        base = coverage(pts, pts[idx])
        others = np.setdiff1d(np.arange(40), idx)
        for slot, c in itertools.product(range(5), others):
            trial = idx.copy()
            trial[slot] = c
            assert coverage(pts, pts[trial]) >= base - 1e-12

    def test_deterministic(self, rng):
        pts = rng.random((80, 2))
        assert np.array_equal(select_knots_sfd(pts, 20, seed=3), select_knots_sfd(pts, 20, seed=3))

    def test_too_many(self):
        with pytest.raises(TooManyKnots):
            select_knots_sfd(np.zeros((3, 2)), 4)


class TestRadialBasis:
    def test_layout_and_normalisation(self, rng):
        pts = rng.random((50, 2))
        basis = build_basis(pts)
        assert basis.L == num_knots(50) + 3
        assert np.allclose(basis.matrix[:, 0], 1.0)
        assert np.allclose(np.abs(basis.matrix).mean(axis=0), 1.0, atol=1e-12)

    def test_evaluate_reproduces_matrix(self, rng):
        pts = rng.random((30, 2))
        basis = build_basis(pts, n_knots=10)
        assert np.allclose(basis.evaluate(pts), basis.matrix, atol=1e-13)

    def test_raw_entries(self):
        pts = np.array([[0.0, 0.0], [0.6, 0.8], [np.e, 0.0]])
        basis = radial_basis_matrix(pts, [[0.0, 0.0]])
        raw = basis.matrix * basis.norm_factors
        assert np.allclose(raw[:, 3], [0.0, 0.0, np.e**2])

    def test_degenerate_column(self):
        with pytest.raises(DegenerateColumn):
            radial_basis_matrix(np.array([[0.0, 0.0], [0.0, 1.0]]), [[5.0, 5.0]])


class TestSmoothingMatrix:
    def test_two_knots(self):
        assert smoothing_matrix(2).tolist() == [0, 0, 0, 1, 1]

    def test_quadratic_forms(self, rng):
        gam = smoothing_matrix(20)
        a = np.r_[rng.normal(size=3), np.zeros(20)]
        assert a @ (gam * a) == 0.0
        assert np.ones(23) @ (gam * np.ones(23)) == 20.0


@pytest.mark.invariant
class TestBasisInvariants:
    @PROPS
    @given(st.integers(0, 2**31 - 1), st.integers(5, 40))
    def test_columns_have_unit_mean_abs(self, seed, n):
        pts = np.random.default_rng(seed).random((n, 2))
        basis = build_basis(pts, n_knots=min(5, n))
        assert np.all(basis.norm_factors > 0)
        assert np.allclose(np.abs(basis.matrix).mean(axis=0), 1.0, atol=1e-12)

    @PROPS
    @given(st.integers(0, 2**31 - 1), st.integers(5, 40))
    def test_rows_follow_location_permutation(self, seed, n):
        rng = np.random.default_rng(seed)
        pts = rng.random((n, 2))
        knots = pts[:4]
        perm = rng.permutation(n)
        a = radial_basis_matrix(pts, knots).matrix
        b = radial_basis_matrix(pts[perm], knots).matrix
        assert np.allclose(a[perm], b, rtol=1e-12, atol=1e-12)

    @PROPS
    @given(st.integers(0, 60))
    def test_gamma_idempotent_psd(self, k):
        g = np.diag(smoothing_matrix(k))
        assert np.array_equal(g @ g, g)
        assert np.linalg.eigvalsh(g).min() >= 0

    @PROPS
    @given(st.integers(0, 2**31 - 1), st.integers(2, 40), st.integers(1, 12))
    def test_knots_are_distinct_observed_points(self, seed, n, k):
        k = min(k, n)
        pts = np.random.default_rng(seed).random((n, 2))
        idx = select_knots_sfd(pts, k, seed=seed)
        assert idx.size == k == np.unique(idx).size
        assert idx.min() >= 0 and idx.max() < n
