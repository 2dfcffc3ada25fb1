"""BIC model selection and Nelder-Mead search over penalty strengths."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .admm import (
    FitResult,
    PenalisedNormalSolver,
    ProblemSpec,
    collapsed_design,
    fit,
)
from .basis import BasisSystem
from .data import SpatialDataset
from .exceptions import AllFitsFailed, NonFiniteObjective, SCVCError, SingularTrace
from .graph import MstGraph, Partition
from .penalty import PenaltyConfig, PenaltyKind

log = logging.getLogger(__name__)

NM_ALPHA, NM_GAMMA, NM_RHO, NM_SIGMA = 1.0, 2.0, 0.5, 0.5
GRID_LAMBDA = (0.01, 0.1, 1.0)  # multiples of SD(y)
GRID_RHO = (1e-6, 1e-4, 1e-2)


@dataclass
class BicReport:
    bic: float
    rss_term: float
    df: float
    cluster_counts: list


def effective_df(dataset: SpatialDataset, basis: BasisSystem, partitions: Sequence[Partition], smooth_weights) -> float:
    """Trace of the ridge hat matrix on the collapsed cluster design."""
    design = collapsed_design(dataset.X, basis.matrix, partitions, smooth_weights, basis.smoothing_diag())
    solver = PenalisedNormalSolver(design, dataset.n, error=SingularTrace)
    xt = design.matrix.T.toarray()
    sol = solver.solve(xt)  # (ncol, n)
    return float(np.sum(xt * sol))


def bic(fit_result: FitResult, dataset: SpatialDataset, basis: BasisSystem, smooth_weights=None) -> BicReport:
    """``n log(RSS / n) + df log n`` for a fit with reconciled coefficients."""
    n = dataset.n
    rho = fit_result.rhos if smooth_weights is None else np.asarray(smooth_weights, dtype=float)
    resid = dataset.y - np.sum(dataset.X * fit_result.beta_hat, axis=1)
    rss = float(resid @ resid)
    rss_term = n * np.log(rss / n) if rss > 0 else -np.inf
    df = effective_df(dataset, basis, fit_result.partitions, rho)
    return BicReport(
        bic=float(rss_term + df * np.log(n)),
        rss_term=float(rss_term),
        df=df,
        cluster_counts=fit_result.cluster_counts,
    )


# ---------------------------------------------------------------------------
# Nelder-Mead


@dataclass
class SimplexState:
    vertices: np.ndarray  # (d + 1, d), sorted by value
    values: np.ndarray
    iteration: int = 0
    evaluations: int = 0


@dataclass
class NelderMeadTrace:
    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # per iteration: reflect/expand/contract/shrink
    evals_per_iter: list = field(default_factory=list)
    iterations: int = 0
    evaluations: int = 0


def initial_simplex(x0, h) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), x0.shape)
    return np.vstack([x0, x0 + np.diag(h)])


def nelder_mead(objective: Callable, x0, h, max_iters: int = 50, tol: float = 1e-3,
                ftol: float = 1e-6, simplex=None):
    """Minimise ``objective`` by the Nelder-Mead simplex method.

    Parameters
    ----------
    objective : callable
        Maps a 1-D array to a float.
    x0, h : array_like
        Start point and per-coordinate step; vertex ``j`` is ``x0 + h_j e_j``.
        Ignored if ``simplex`` is given.
    max_iters : int
    tol : float
        Stop once every vertex is within ``tol`` (max norm) of the best one.
    ftol : float
        Or once the spread of vertex values is below ``ftol``.

    Returns
    -------
    best_point, best_value, trace
    """
    trace = NelderMeadTrace()

    def f(x):
        val = float(objective(x))
        trace.points.append(np.array(x))
        trace.values.append(val)
        if np.isnan(val):
            raise NonFiniteObjective(f"objective is NaN at {x}")
        return val

    verts = initial_simplex(x0, h) if simplex is None else np.array(simplex, dtype=float)
    vals = np.array([f(v) for v in verts])
    if not np.all(np.isfinite(vals)):
        raise NonFiniteObjective("objective must be finite at every initial vertex")
    state = SimplexState(verts, vals, 0, len(vals))

    while True:
        order = np.argsort(state.values, kind="stable")
        state.vertices, state.values = state.vertices[order], state.values[order]
        spread = np.max(np.abs(state.vertices - state.vertices[0]))
        if spread < tol or state.values[-1] - state.values[0] < ftol or state.iteration >= max_iters:
            break
        state.iteration += 1
        verts, vals = state.vertices, state.values
        best, second_worst, worst = vals[0], vals[-2], vals[-1]
        xc = verts[:-1].mean(axis=0)
        xr = xc + NM_ALPHA * (xc - verts[-1])
        fr = f(xr)
        n_eval = 1
        if best <= fr < second_worst:
            verts[-1], vals[-1] = xr, fr
            step = "reflect"
        elif fr < best:
            xe = xc + NM_GAMMA * (xr - xc)
            fe = f(xe)
            n_eval += 1
            if fe < fr:
                verts[-1], vals[-1] = xe, fe
                step = "expand"
            else:
                verts[-1], vals[-1] = xr, fr
                step = "reflect"
        else:
            xt = xc + NM_RHO * (verts[-1] - xc)
            ft = f(xt)
            n_eval += 1
            if ft < worst:
                verts[-1], vals[-1] = xt, ft
                step = "contract"
            else:
                verts[1:] = verts[0] + NM_SIGMA * (verts[1:] - verts[0])
                vals[1:] = [f(v) for v in verts[1:]]
                n_eval += len(verts) - 1
                step = "shrink"
        state.evaluations += n_eval
        trace.steps.append(step)
        trace.evals_per_iter.append(n_eval)

    trace.iterations = state.iteration
    trace.evaluations = state.evaluations
    return state.vertices[0].copy(), float(state.values[0]), trace


# ---------------------------------------------------------------------------
# tuning


@dataclass
class SearchConfig:
    grid_lambda: Sequence[float] = GRID_LAMBDA  # multiples of SD(y)
    grid_rho: Sequence[float] = GRID_RHO
    max_iters: int = 50
    tol: float = 1e-3
    ftol: float = 1e-6
    step_fraction: float = 0.5  # h = step_fraction * x0 in natural scale
    gamma: float | None = None
    theta: float = 1.0
    admm_tol: float | None = None
    admm_max_iters: int = 2000
    refit: bool = False


@dataclass
class TraceRow:
    stage: str
    lambdas: np.ndarray
    rhos: np.ndarray
    bic: float
    df: float
    cluster_counts: list
    iterations: int
    converged: bool
    error: str = ""


@dataclass
class TuneResult:
    lambdas: np.ndarray
    rhos: np.ndarray
    report: BicReport
    fit: FitResult
    trace: list
    nm_iterations: int = 0
    nm_evaluations: int = 0


def tune(dataset: SpatialDataset, basis: BasisSystem, mst: MstGraph,
         penalty_kind=PenaltyKind.SCAD, search: SearchConfig | None = None) -> TuneResult:
    """Grid-seeded Nelder-Mead search of per-covariate penalty strengths.

    The search runs over ``(log lambda_1..p, log rho_1..p)``. The best fit
    seen at any stage (grid or simplex) is returned.
    """
    search = search or SearchConfig()
    p = dataset.p
    sd = float(np.std(dataset.y, ddof=1))
    sd = sd if sd > 0 else 1.0
    base = PenaltyConfig(penalty_kind, 1.0, search.gamma)
    trace: list[TraceRow] = []
    best: dict = {"bic": np.inf}

    def evaluate(lambdas, rhos, stage):
        spec = ProblemSpec(
            dataset, basis, mst, [base.with_lambda(lam) for lam in lambdas], rhos,
            theta=search.theta, tol_primal=search.admm_tol, tol_dual=search.admm_tol,
            max_iters=search.admm_max_iters,
        )
        try:
            res = fit(spec, refit=search.refit)
            rep = bic(res, dataset, basis)
        except SCVCError as exc:
            trace.append(TraceRow(stage, np.array(lambdas), np.array(rhos), np.inf, np.nan, [], 0, False, str(exc)))
            log.info("candidate failed at lambda=%s rho=%s: %s", lambdas, rhos, exc)
            return np.inf
        trace.append(TraceRow(stage, np.array(lambdas), np.array(rhos), rep.bic, rep.df,
                              rep.cluster_counts, res.iterations, res.converged))
        if rep.bic < best["bic"]:
            best.update(bic=rep.bic, lambdas=np.array(lambdas), rhos=np.array(rhos), report=rep, fit=res)
        return rep.bic

    grid_best = (np.inf, None)
    for lam_mult, rho in itertools.product(search.grid_lambda, search.grid_rho):
        lambdas = np.full(p, lam_mult * sd)
        rhos = np.full(p, rho)
        val = evaluate(lambdas, rhos, "grid")
        if val < grid_best[0]:
            grid_best = (val, np.r_[lambdas, rhos])
    if grid_best[1] is None:
        raise AllFitsFailed("every grid candidate failed")

    # log-space simplex; h = x0 * step_fraction in natural scale
    x0 = grid_best[1]
    log_x0 = np.log(x0)
    log_h = np.log1p(search.step_fraction) * np.ones_like(log_x0)

    def objective(z):
        val = evaluate(np.exp(z[:p]), np.exp(z[p:]), "simplex")
        # failed candidates are pushed away rather than aborting the search
        return val if np.isfinite(val) else 1e300

    _, _, nm_trace = nelder_mead(objective, log_x0, log_h, max_iters=search.max_iters,
                                 tol=search.tol, ftol=search.ftol)
    log.info("Nelder-Mead: %d iterations, %d evaluations", nm_trace.iterations, nm_trace.evaluations)
    return TuneResult(
        lambdas=best["lambdas"],
        rhos=best["rhos"],
        report=best["report"],
        fit=best["fit"],
        trace=trace,
        nm_iterations=nm_trace.iterations,
        nm_evaluations=nm_trace.evaluations,
    )
