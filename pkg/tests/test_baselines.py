"""Tests for the global spline, constant-cluster and local-regression baselines."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import small_system, two_region_data
from scvcm.admm import oracle_fit
from scvcm.baselines import (
    GwrConfig,
    constant_basis,
    gwr,
    gwr_cv_bandwidth,
    gwr_cv_score,
    pse,
    pse_bic,
    scc_star,
    true_value_init,
    tune_pse,
    tune_scc_star,
)
from scvcm.data import SpatialDataset
from scvcm.exceptions import SingularLocalFit, ValidationError
from scvcm.graph import Partition, euclidean_mst
from scvcm.metrics import rand_index
from scvcm.simulation import ScenarioConfig, Study, make_dataset

PROPS = settings(max_examples=100, deadline=None)


def ols(X, y):
    return np.linalg.lstsq(X, y, rcond=None)[0]


# ====================================================================
# PSE
# ====================================================================


class TestPse:
    def test_is_single_cluster_oracle(self):
        data, _, _ = two_region_data(1, n=50)
        basis, _ = small_system(data)
        one = Partition(np.zeros(50, int))
        ref = oracle_fit(data, basis, [one, one], [0.01, 0.02])
        assert np.array_equal(pse(data, basis, [0.01, 0.02]).coefficients, ref)

    def test_unpenalised_is_projection(self):
        data, _, _ = two_region_data(2, n=50, p=1)
        basis, _ = small_system(data)
        fitted = pse(data, basis, [0.0])
        proj = basis.matrix @ ols(basis.matrix, data.y)
        assert np.allclose(fitted.beta_hat[:, 0], proj, atol=1e-9)

    def test_tune_picks_grid_minimum(self):
        data, _, _ = two_region_data(3, n=50)
        basis, _ = small_system(data)
        grid = (1e-6, 1e-3, 1.0)
        best = min(grid, key=lambda r: pse_bic(data, basis, [r, r]))
        assert tune_pse(data, basis, grid).params["rhos"].tolist() == [best, best]


# ====================================================================
# SCC*
# ====================================================================


class TestSccStar:
    def test_constant_basis(self):
        b = constant_basis(4)
        assert b.L == 1 and b.smoothing_diag().tolist() == [0.0]
        assert np.array_equal(b.evaluate(np.zeros((3, 2))), np.ones((3, 1)))

    def test_huge_lambda_is_pooled_ols(self):
        data, _, _ = two_region_data(4, n=60)
        mst = euclidean_mst(data.coords)
        res = scc_star(data, mst, 1e6, tol=1e-10, max_iters=5000)
        assert res.cluster_counts == [1, 1]
        assert np.allclose(res.beta_hat[0], ols(data.X, data.y), atol=1e-6)

    def test_true_value_init_recovers_clusters(self):
        data, region, beta = two_region_data(5, n=200, gap=1.5)
        mst = euclidean_mst(data.coords)
        res = scc_star(data, mst, 0.05, init=true_value_init(data, mst, beta))
        assert [rand_index(part, region) for part in res.partitions] == [1.0, 1.0]

    def test_varying_surface_overclusters(self):
        cfg = ScenarioConfig(n=120, study=Study.SMOOTH_VARYING, seed=3)
        data, truth = make_dataset(cfg)
        res, lambdas = tune_scc_star(data, truth.mst, max_iters=5)
        assert lambdas.shape == (2,)
        assert min(res.cluster_counts) > 4

    def test_unknown_init(self):
        data, _, _ = two_region_data(6, n=20)
        with pytest.raises(ValidationError, match="unknown init"):
            scc_star(data, euclidean_mst(data.coords), 0.1, init="ridge")


# ====================================================================
# GWR
# ====================================================================


class TestGwr:
    def test_wide_kernel_is_ols(self):
        data, _, _ = two_region_data(7, n=80)
        fitted = gwr(data, GwrConfig(1e6))
        assert np.max(np.abs(fitted.beta_hat - ols(data.X, data.y))) < 1e-6

    def test_constant_response(self, rng):
        data = SpatialDataset(rng.random((30, 2)), np.ones((30, 1)), np.full(30, 2.5))
        assert np.allclose(gwr(data, GwrConfig(0.1)).beta_hat, 2.5)

    def test_singular_local_fit(self, rng):
        X = np.column_stack([np.ones(20), np.ones(20)])
        data = SpatialDataset(rng.random((20, 2)), X, rng.normal(size=20))
        with pytest.raises(SingularLocalFit):
            gwr(data, GwrConfig(0.3))

    def test_size_guard(self, rng):
        data = SpatialDataset(rng.random((30, 2)), np.ones((30, 1)), rng.normal(size=30))
        with pytest.raises(ValidationError, match="max_n"):
            gwr(data, GwrConfig(1.0), max_n=20)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_bandwidth_positive(self, bad):
        with pytest.raises(ValidationError):
            GwrConfig(bad)


class TestGwrCv:
    def test_single_candidate(self, rng):
        data = SpatialDataset(rng.random((10, 2)), np.ones((10, 1)), rng.normal(size=10))
        assert gwr_cv_bandwidth(data, [0.7]) == 0.7

    def test_returns_arg_min(self):
        data, _, _ = two_region_data(8, n=60)
        cands = np.geomspace(0.02, 2.0, 8)
        best = gwr_cv_bandwidth(data, cands)
        assert gwr_cv_score(data, best) == min(gwr_cv_score(data, h) for h in cands)

    def test_constant_truth_prefers_widest(self, rng):
        n = 80
        X = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = X @ [1.0, -0.5] + 0.3 * rng.normal(size=n)
        data = SpatialDataset(rng.random((n, 2)), X, y)
        cands = np.geomspace(0.05, 50.0, 7)
        assert gwr_cv_bandwidth(data, cands) == cands[-1]

    def test_smooth_surface_interior_minimum(self, rng):
        n = 150
        coords = rng.random((n, 2))
        y = np.sin(6 * coords[:, 0]) + 0.05 * rng.normal(size=n)
        data = SpatialDataset(coords, np.ones((n, 1)), y)
        cands = np.geomspace(0.005, 50.0, 12)
        scores = [gwr_cv_score(data, h) for h in cands]
        assert np.all(np.isfinite(scores))
        assert 0 < int(np.argmin(scores)) < len(cands) - 1


# ====================================================================
# invariants
# ====================================================================


@pytest.mark.invariant
class TestBaselineInvariants:
    @PROPS
    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
    def test_pse_bitwise_oracle(self, seed, rho):
        data, _, _ = two_region_data(seed, n=25)
        basis, _ = small_system(data, n_knots=3)
        one = Partition(np.zeros(25, int))
        assert np.array_equal(pse(data, basis, [rho, rho]).coefficients,
                              oracle_fit(data, basis, [one, one], [rho, rho]))

    @PROPS
    @given(st.integers(0, 2**31 - 1))
    def test_tiny_lambda_gives_ratios(self, seed):
        rng = np.random.default_rng(seed)
        n = 12
        x = rng.uniform(0.5, 2.0, n) * rng.choice([-1, 1], n)
        data = SpatialDataset(rng.random((n, 2)), x[:, None], rng.normal(size=n))
        # a small theta speeds up this unfused limit without changing the fixed point
        res = scc_star(data, euclidean_mst(data.coords), 1e-12, init=None, theta=0.02, tol=1e-11,
                       max_iters=20000)
        assert np.allclose(res.beta_hat[:, 0], data.y / x, atol=1e-6)

    @PROPS
    @given(st.integers(0, 2**31 - 1))
    def test_wide_gwr_is_ols(self, seed):
        data, _, _ = two_region_data(seed, n=30)
        fitted = gwr(data, GwrConfig(1e6))
        assert np.max(np.abs(fitted.beta_hat - ols(data.X, data.y))) < 1e-6
