"""Comparison estimators: global P-spline, constant-per-cluster fusion, GWR."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .admm import AdmmState, FitResult, ProblemSpec, fit, oracle_fit
from .basis import BasisSystem
from .data import SpatialDataset
from .exceptions import SingularLocalFit, ValidationError
from .graph import MstGraph, Partition
from .penalty import PenaltyKind, PenaltyConfig, lasso
from .tuning import bic, effective_df, nelder_mead

log = logging.getLogger(__name__)

GWR_MAX_N = 5000
LOCAL_RCOND = 1e-12
PSE_RHO_GRID = tuple(np.geomspace(1e-8, 1.0, 17))
SCC_LAMBDA_GRID = tuple(np.geomspace(1e-3, 1.0, 10))  # multiples of SD(y)


@dataclass
class BaselineFit:
    coefficients: np.ndarray | None
    beta_hat: np.ndarray  # (n, p)
    partitions: list | None = None
    params: dict | None = None

    @property
    def cluster_counts(self):
        return None if self.partitions is None else [q.cluster_count for q in self.partitions]


# ---------------------------------------------------------------------------
# PSE


def pse(dataset: SpatialDataset, basis: BasisSystem, smooth_weights) -> BaselineFit:
    """Global spline fit: every location shares one coefficient vector per covariate."""
    one = [Partition(np.zeros(dataset.n, dtype=int))] * dataset.p
    coef = oracle_fit(dataset, basis, one, smooth_weights)
    return BaselineFit(
        coefficients=coef,
        beta_hat=np.einsum("ikl,il->ik", coef, basis.matrix),
        partitions=one,
        params={"rhos": np.broadcast_to(np.asarray(smooth_weights, float), (dataset.p,)).copy()},
    )


def pse_bic(dataset: SpatialDataset, basis: BasisSystem, smooth_weights) -> float:
    fitted = pse(dataset, basis, smooth_weights)
    resid = dataset.y - np.sum(dataset.X * fitted.beta_hat, axis=1)
    rss = float(resid @ resid)
    df = effective_df(dataset, basis, fitted.partitions, smooth_weights)
    return dataset.n * np.log(rss / dataset.n) + df * np.log(dataset.n)


def tune_pse(dataset: SpatialDataset, basis: BasisSystem, grid=PSE_RHO_GRID) -> BaselineFit:
    """PSE with a shared smoothing weight picked by BIC over ``grid``."""
    scores = [pse_bic(dataset, basis, np.full(dataset.p, r)) for r in grid]
    rho = grid[int(np.argmin(scores))]
    return pse(dataset, basis, np.full(dataset.p, rho))


# ---------------------------------------------------------------------------
# SCC*


@dataclass(frozen=True)
class ConstantBasis(BasisSystem):
    """Single constant basis function with no smoothing penalty."""

    def evaluate(self, points):
        return np.ones((np.atleast_2d(points).shape[0], 1))

    def smoothing_diag(self):
        return np.zeros(1)


def constant_basis(n: int) -> ConstantBasis:
    return ConstantBasis(knots=np.empty((0, 2)), norm_factors=np.ones(1), matrix=np.ones((n, 1)))


def _scc_spec(dataset, mst, penalties, theta, max_iters, tol):
    return ProblemSpec(
        dataset, constant_basis(dataset.n), mst, penalties, np.zeros(dataset.p),
        theta=theta, tol_primal=tol, tol_dual=tol, max_iters=max_iters,
    )


def scc_star(dataset: SpatialDataset, mst: MstGraph, lambda_vec, init: AdmmState | str | None = "lasso",
             gamma: float = 3.7, theta: float = 1.0, max_iters: int = 2000, tol=None) -> FitResult:
    """Constant coefficient per location, SCAD-fused along the MST.

    ``init="lasso"`` warm-starts from a LASSO-fused run at the same
    strengths; an :class:`AdmmState` is used as given; ``None`` starts cold.
    """
    lambda_vec = np.broadcast_to(np.asarray(lambda_vec, dtype=float), (dataset.p,))
    if init == "lasso":
        warm = _scc_spec(dataset, mst, [lasso(lam) for lam in lambda_vec], theta, max_iters, tol)
        res = fit(warm)
        init = AdmmState(res.raw_coefficients, res.eta_hat, res.upsilon_hat)
    elif isinstance(init, str):
        raise ValidationError(f"unknown init {init!r}")
    pens = [PenaltyConfig(PenaltyKind.SCAD, lam, gamma) for lam in lambda_vec]
    return fit(_scc_spec(dataset, mst, pens, theta, max_iters, tol), initial=init)


def true_value_init(dataset: SpatialDataset, mst: MstGraph, beta) -> AdmmState:
    """ADMM state consistent with known constant coefficients."""
    a = np.asarray(beta, dtype=float)[:, :, None]
    eta = (mst.incidence() @ a[:, :, 0])[:, :, None]
    return AdmmState(a, eta, np.zeros_like(eta))


def tune_scc_star(dataset: SpatialDataset, mst: MstGraph, grid=SCC_LAMBDA_GRID,
                  max_iters: int = 30, gamma: float = 3.7) -> tuple[FitResult, np.ndarray]:
    """BIC-tuned SCC*: shared-strength grid, then simplex over per-covariate strengths."""
    sd = float(np.std(dataset.y, ddof=1)) or 1.0
    basis = constant_basis(dataset.n)
    best = {"bic": np.inf}

    def score(lambdas):
        res = scc_star(dataset, mst, lambdas, gamma=gamma)
        val = bic(res, dataset, basis, np.zeros(dataset.p)).bic
        if val < best["bic"]:
            best.update(bic=val, fit=res, lambdas=np.array(lambdas))
        return val

    grid_vals = [score(np.full(dataset.p, g * sd)) for g in grid]
    x0 = np.full(dataset.p, np.log(grid[int(np.argmin(grid_vals))] * sd))
    nelder_mead(lambda z: score(np.exp(z)), x0, np.log(1.5), max_iters=max_iters)
    return best["fit"], best["lambdas"]


# ---------------------------------------------------------------------------
# GWR


@dataclass(frozen=True)
class GwrConfig:
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValidationError("bandwidth must be positive")


def _local_systems(dataset: SpatialDataset, weights: np.ndarray):
    X, y = dataset.X, dataset.y
    A = np.einsum("ij,jk,jl->ikl", weights, X, X)
    b = weights @ (X * y[:, None])
    return A, b


def _check_local(A):
    eig = np.linalg.eigvalsh(A)
    bad = eig[:, 0] <= LOCAL_RCOND * np.maximum(eig[:, -1], 1e-300)
    if bad.any():
        raise SingularLocalFit(int(np.flatnonzero(bad)[0]))


def _guard_n(n, max_n):
    if max_n is not None and n > max_n:
        raise ValidationError(f"GWR is limited to n <= {max_n} (got {n}); raise max_n to override")


def gwr(dataset: SpatialDataset, config: GwrConfig, max_n: int | None = GWR_MAX_N) -> BaselineFit:
    """Local weighted least squares with weights ``exp(-d / bandwidth)``."""
    _guard_n(dataset.n, max_n)
    d = cdist(dataset.coords, dataset.coords)
    A, b = _local_systems(dataset, np.exp(-d / config.bandwidth))
    _check_local(A)
    beta = np.linalg.solve(A, b[:, :, None])[:, :, 0]
    return BaselineFit(None, beta, None, {"bandwidth": config.bandwidth})


def gwr_cv_score(dataset: SpatialDataset, bandwidth: float, distances=None) -> float:
    """Leave-one-out squared prediction error (self-weight removed)."""
    d = cdist(dataset.coords, dataset.coords) if distances is None else distances
    w = np.exp(-d / bandwidth)
    np.fill_diagonal(w, 0.0)
    A, b = _local_systems(dataset, w)
    _check_local(A)
    beta = np.linalg.solve(A, b[:, :, None])[:, :, 0]
    return float(np.sum((dataset.y - np.sum(dataset.X * beta, axis=1)) ** 2))


def default_bandwidths(coords, count: int = 15) -> np.ndarray:
    span = float(np.ptp(coords, axis=0).max()) or 1.0
    return np.geomspace(0.01, 2.0, count) * span


def gwr_cv_bandwidth(dataset: SpatialDataset, candidates=None, max_n: int | None = GWR_MAX_N) -> float:
    """Candidate bandwidth with the smallest leave-one-out error (first on ties)."""
    _guard_n(dataset.n, max_n)
    cands = default_bandwidths(dataset.coords) if candidates is None else np.asarray(candidates, float)
    if cands.size == 0:
        raise ValidationError("need at least one candidate bandwidth")
    if cands.size == 1:
        return float(cands[0])
    d = cdist(dataset.coords, dataset.coords)
    scores = []
    failure = None
    for h in cands:
        try:
            scores.append(gwr_cv_score(dataset, h, d))
        except SingularLocalFit as exc:
            # too-narrow kernels leave some location without support; skip them
            log.info("bandwidth %.4g skipped: %s", h, exc)
            scores.append(np.inf)
            failure = exc
    if not np.isfinite(scores).any():
        raise failure
    return float(cands[int(np.argmin(scores))])
