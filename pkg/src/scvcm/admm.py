"""ADMM solver for the fused spatially clustered coefficient problem.

Coefficient arrays use the layout ``(n, p, L)``; per-edge arrays
(``eta``, ``upsilon``) use ``(n - 1, p, L)`` with edge order taken from
``MstGraph.edges``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import BasisSystem
from .data import SpatialDataset
from .exceptions import (
    DimensionMismatch,
    NonPositiveTheta,
    NotConverged,
    SingularSystem,
    ValidationError,
)
from .graph import MstGraph, Partition, identified_clusters
from .penalty import PenaltyConfig, group_threshold, penalty_value
from .pisystem import PiSystem, assemble_pi as _assemble, design_tensor, fitted_values, make_solver

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 2000
OBJECTIVE_SLACK = 1e-6


def default_tolerance(n: int, p: int, L: int) -> float:
    """Absolute residual tolerance ``1e-4 * sqrt(p (n-1) L)``."""
    return 1e-4 * np.sqrt(p * (n - 1) * L)


@dataclass
class ProblemSpec:
    dataset: SpatialDataset
    basis: BasisSystem
    mst: MstGraph
    penalties: Sequence[PenaltyConfig]
    smooth_weights: Sequence[float]
    theta: float = 1.0
    tol_primal: float | None = None
    tol_dual: float | None = None
    max_iters: int = DEFAULT_MAX_ITERS
    solver: str = "auto"

    def __post_init__(self):
        p = self.dataset.p
        self.penalties = list(self.penalties)
        self.smooth_weights = np.asarray(self.smooth_weights, dtype=float).ravel()
        if len(self.penalties) != p or self.smooth_weights.size != p:
            raise DimensionMismatch(f"need {p} penalties and smooth weights")
        if np.any(self.smooth_weights < 0) or not np.all(np.isfinite(self.smooth_weights)):
            raise ValidationError("smooth weights must be finite and nonnegative")
        if not self.theta > 0:
            raise NonPositiveTheta(f"theta must be positive, got {self.theta}")
        if self.basis.matrix.shape[0] != self.dataset.n or self.mst.n != self.dataset.n:
            raise DimensionMismatch("dataset, basis and MST disagree on n")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")
        tol = default_tolerance(self.dataset.n, p, self.basis.L)
        if self.tol_primal is None:
            self.tol_primal = tol
        if self.tol_dual is None:
            self.tol_dual = tol

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.dataset.n, self.dataset.p, self.basis.L

    def design(self) -> np.ndarray:
        return design_tensor(self.dataset.X, self.basis.matrix)

    def with_tuning(self, lambdas, rhos) -> "ProblemSpec":
        pens = [pen.with_lambda(float(lam)) for pen, lam in zip(self.penalties, lambdas)]
        return ProblemSpec(
            self.dataset, self.basis, self.mst, pens, rhos, self.theta,
            self.tol_primal, self.tol_dual, self.max_iters, self.solver,
        )


@dataclass
class AdmmState:
    a: np.ndarray  # (n, p, L)
    eta: np.ndarray  # (m, p, L)
    upsilon: np.ndarray  # (m, p, L)
    iter: int = 0
    primal_history: list = field(default_factory=list)
    dual_history: list = field(default_factory=list)

    @classmethod
    def zeros(cls, n, p, L) -> "AdmmState":
        return cls(np.zeros((n, p, L)), np.zeros((n - 1, p, L)), np.zeros((n - 1, p, L)))


@dataclass
class FitResult:
    coefficients: np.ndarray  # (n, p, L), reconciled
    beta_hat: np.ndarray  # (n, p)
    partitions: list
    eta_hat: np.ndarray
    upsilon_hat: np.ndarray
    converged: bool
    iterations: int
    objective: float
    lambdas: np.ndarray
    rhos: np.ndarray
    theta: float
    primal_history: list
    dual_history: list
    objective_increases: int = 0
    raw_coefficients: np.ndarray | None = None
    solver: str = ""

    @property
    def cluster_counts(self) -> list[int]:
        return [part.cluster_count for part in self.partitions]


def assemble_pi(spec: ProblemSpec) -> PiSystem:
    """Sparse coefficient-update matrix and ``B'y / n`` for ``spec``."""
    return _assemble(
        spec.design(), spec.dataset.y, spec.mst, spec.theta,
        spec.smooth_weights, spec.basis.smoothing_diag(),
    )


def _edge_diff(incidence, a):
    m = incidence.shape[0]
    return (incidence @ a.reshape(a.shape[0], -1)).reshape((m,) + a.shape[1:])


def _edge_scatter(incidence_t, v):
    n = incidence_t.shape[0]
    return (incidence_t @ v.reshape(v.shape[0], -1)).reshape((n,) + v.shape[1:])


def step_a(state: AdmmState, solver, rhs_base, incidence_t, theta):
    """Coefficient update: solve ``Pi a = B'y/n + sum_e (e_i - e_j)(theta eta - upsilon)``."""
    rhs = rhs_base + _edge_scatter(incidence_t, theta * state.eta - state.upsilon)
    return solver.solve(rhs)


def step_eta(a, upsilon, incidence, penalties, theta):
    """Edge-wise group thresholding of ``a_i - a_j + upsilon / theta``."""
    delta = _edge_diff(incidence, a) + upsilon / theta
    eta = np.empty_like(delta)
    for k, pen in enumerate(penalties):
        eta[:, k, :] = group_threshold(pen, delta[:, k, :], theta)
    return eta


def step_dual(a, eta, upsilon, incidence, theta):
    return upsilon + theta * (_edge_diff(incidence, a) - eta)


def residuals(a, eta, eta_prev, incidence, theta, incidence_t=None) -> tuple[float, float]:
    """Norms of the stacked primal residual and of the dual residual."""
    incidence_t = incidence.T.tocsr() if incidence_t is None else incidence_t
    primal = np.linalg.norm(_edge_diff(incidence, a) - eta)
    dual = theta * np.linalg.norm(_edge_scatter(incidence_t, eta - eta_prev))
    return float(primal), float(dual)


def objective(spec: ProblemSpec, a: np.ndarray, Z: np.ndarray | None = None, incidence=None) -> float:
    """Penalised least-squares objective evaluated at coefficients ``a``."""
    Z = spec.design() if Z is None else Z
    incidence = spec.mst.incidence() if incidence is None else incidence
    n = spec.dataset.n
    rss = float(np.sum((spec.dataset.y - fitted_values(Z, a)) ** 2))
    gam = spec.basis.smoothing_diag()
    diffs = np.linalg.norm(_edge_diff(incidence, a), axis=2)  # (m, p)
    fused = sum(float(np.sum(penalty_value(pen, diffs[:, k]))) for k, pen in enumerate(spec.penalties))
    smooth = float(np.einsum("k,ikl,l->", spec.smooth_weights, a**2, gam))
    return rss / (2 * n) + fused + smooth


def reconcile(a: np.ndarray, partitions: Sequence[Partition]) -> np.ndarray:
    """Replace coefficients by their within-cluster means, per covariate."""
    out = a.copy()
    for k, part in enumerate(partitions):
        counts = part.sizes().astype(float)
        sums = np.zeros((part.cluster_count, a.shape[2]))
        np.add.at(sums, part.labels, a[:, k, :])
        out[:, k, :] = (sums / counts[:, None])[part.labels]
    return out


def fit(spec: ProblemSpec, *, refit: bool = False, strict: bool = False,
        initial: AdmmState | None = None) -> FitResult:
    """Run ADMM to the residual tolerances and extract clusters.

    With ``strict=True`` hitting ``max_iters`` raises :class:`NotConverged`
    (the partial result is attached); otherwise the result is returned with
    ``converged=False``.
    """
    n, p, L = spec.shape
    theta = spec.theta
    Z = spec.design()
    solver = make_solver(Z, spec.mst, theta, spec.smooth_weights, spec.basis.smoothing_diag(), spec.solver)
    inc = spec.mst.incidence()
    inc_t = inc.T.tocsr()
    rhs_base = Z * (spec.dataset.y / n)[:, None, None]

    state = initial if initial is not None else AdmmState.zeros(n, p, L)
    converged = False
    increases = 0
    prev_obj = np.inf
    for it in range(1, spec.max_iters + 1):
        state.a = step_a(state, solver, rhs_base, inc_t, theta)
        eta_prev = state.eta
        state.eta = step_eta(state.a, state.upsilon, inc, spec.penalties, theta)
        state.upsilon = step_dual(state.a, state.eta, state.upsilon, inc, theta)
        primal, dual = residuals(state.a, state.eta, eta_prev, inc, theta, inc_t)
        state.iter = it
        state.primal_history.append(primal)
        state.dual_history.append(dual)
        obj = objective(spec, state.a, Z, inc)
        if obj > prev_obj + OBJECTIVE_SLACK * max(1.0, abs(prev_obj)):
            increases += 1
        prev_obj = obj
        if primal <= spec.tol_primal and dual <= spec.tol_dual:
            converged = True
            break
    if increases:
        log.info("objective increased on %d of %d iterations", increases, state.iter)

    partitions = [identified_clusters(state.eta[:, k, :], spec.mst) for k in range(p)]
    if refit:
        coef = oracle_fit(spec.dataset, spec.basis, partitions, spec.smooth_weights)
    else:
        coef = reconcile(state.a, partitions)
    result = FitResult(
        coefficients=coef,
        beta_hat=np.einsum("ikl,il->ik", coef, spec.basis.matrix),
        partitions=partitions,
        eta_hat=state.eta,
        upsilon_hat=state.upsilon,
        converged=converged,
        iterations=state.iter,
        objective=objective(spec, coef, Z),
        lambdas=np.array([pen.lam for pen in spec.penalties]),
        rhos=spec.smooth_weights.copy(),
        theta=theta,
        primal_history=state.primal_history,
        dual_history=state.dual_history,
        objective_increases=increases,
        raw_coefficients=state.a,
        solver=solver.method,
    )
    if not converged:
        if strict:
            raise NotConverged(result)
        log.warning("ADMM stopped at max_iters=%d without meeting tolerances", spec.max_iters)
    return result


# ---------------------------------------------------------------------------
# restricted fits on a known partition


@dataclass
class CollapsedDesign:
    """Design with one block of ``L`` columns per (covariate, cluster).

    ``matrix`` is sparse ``(n, L * sum_k G_k)``; ``penalty`` is the diagonal
    ``rho_k * |cluster| * Gamma`` for each block; ``offsets[k]`` is the first
    block index of covariate ``k``.
    """

    matrix: sp.csr_matrix
    penalty: np.ndarray
    offsets: np.ndarray
    L: int


def collapsed_design(X, basis_matrix, partitions: Sequence[Partition], smooth_weights, gamma_diag) -> CollapsedDesign:
    n, p = X.shape
    L = basis_matrix.shape[1]
    counts = np.array([part.cluster_count for part in partitions])
    offsets = np.r_[0, np.cumsum(counts)[:-1]]
    block = offsets[None, :] + np.column_stack([part.labels for part in partitions])  # (n, p)
    cols = (block[:, :, None] * L + np.arange(L)[None, None, :]).reshape(n, -1)
    vals = (X[:, :, None] * basis_matrix[:, None, :]).reshape(n, -1)
    ncol = int(counts.sum()) * L
    rows = np.repeat(np.arange(n), p * L)
    mat = sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(n, ncol))
    rho = np.asarray(smooth_weights, dtype=float)
    pen = np.concatenate([
        (rho[k] * part.sizes()[:, None] * gamma_diag[None, :]).ravel()
        for k, part in enumerate(partitions)
    ])
    return CollapsedDesign(mat, pen, offsets, L)


JITTER = 1e-10
PIVOT_RTOL = 1e-11


class PenalisedNormalSolver:
    """Factorisation of ``Z'Z + 2 n diag(penalty)`` with a rank guard.

    If the LU pivots reveal numerical rank deficiency (clusters too small to
    identify their unpenalised directions) a relative diagonal jitter is
    added. Directions in the null space have ``Z v = 0``, so fitted values
    and hat-matrix traces are unaffected to first order.
    """

    def __init__(self, design: CollapsedDesign, n: int, error=SingularSystem):
        z = design.matrix.tocsc()
        mat = (z.T @ z + sp.diags(2 * n * design.penalty)).tocsc()
        self.matrix = mat
        self.jittered = False
        # unit-diagonal scaling so the rank test ignores heavy smoothing weights
        diag = mat.diagonal()
        d = 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0))
        scaled = (sp.diags(d) @ mat @ sp.diags(d)).tocsc()
        try:
            lu = spla.splu(scaled, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
            piv = np.abs(lu.U.diagonal())
            if piv.min() < PIVOT_RTOL * piv.max():
                raise RuntimeError("rank deficient")
        except RuntimeError:
            self.jittered = True
            try:
                lu = spla.splu(
                    (scaled + JITTER * sp.identity(mat.shape[0], format="csc")).tocsc(),
                    permc_spec="MMD_AT_PLUS_A",
                    options={"SymmetricMode": True},
                )
            except RuntimeError as exc:
                raise error("penalised normal equations are singular after jitter") from exc
        self._lu = lu
        self._d = d
        self._error = error

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        d = self._d if rhs.ndim == 1 else self._d[:, None]
        out = d * self._lu.solve(d * rhs)
        if not np.all(np.isfinite(out)):
            raise self._error("non-finite solution of the penalised normal equations")
        return out


def expand_collapsed(alpha, partitions, L) -> np.ndarray:
    """Map collapsed block coefficients back to ``(n, p, L)``."""
    n, p = partitions[0].n, len(partitions)
    out = np.empty((n, p, L))
    start = 0
    for k, part in enumerate(partitions):
        blocks = alpha[start:start + part.cluster_count * L].reshape(part.cluster_count, L)
        out[:, k, :] = blocks[part.labels]
        start += part.cluster_count * L
    return out


def oracle_fit(dataset: SpatialDataset, basis: BasisSystem, partitions: Sequence[Partition], smooth_weights) -> np.ndarray:
    """Penalised least squares with coefficients tied within known clusters.

    Returns ``(n, p, L)`` coefficients, equal within each cluster.
    """
    partitions = list(partitions)
    if len(partitions) != dataset.p:
        raise DimensionMismatch(f"need {dataset.p} partitions, got {len(partitions)}")
    for part in partitions:
        if part.n != dataset.n:
            raise DimensionMismatch("partition does not cover every location")
    design = collapsed_design(dataset.X, basis.matrix, partitions, smooth_weights, basis.smoothing_diag())
    solver = PenalisedNormalSolver(design, dataset.n)
    alpha = solver.solve(design.matrix.T @ dataset.y)
    return expand_collapsed(alpha, partitions, basis.L)
