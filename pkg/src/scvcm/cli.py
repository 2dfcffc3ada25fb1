"""Command-line entry point: ``simulate``, ``fit``, ``tune`` and ``benchmark``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .admm import ProblemSpec, fit
from .baselines import GWR_MAX_N, GwrConfig, gwr, gwr_cv_bandwidth, pse, scc_star, tune_pse, tune_scc_star
from .basis import build_basis
from .benchmark import METHODS, aggregate, run_benchmark
from .exceptions import NotConverged, SCVCError
from .graph import euclidean_mst
from .penalty import PenaltyConfig
from .simulation import MIN_N, Pattern, ScenarioConfig, Study, make_dataset
from .tuning import GRID_LAMBDA, GRID_RHO, SearchConfig, tune

log = logging.getLogger("scvcm")


class UsageError(Exception):
    """Bad flag values detected after parsing (exit code 2)."""


def _add_model_flags(ap):
    ap.add_argument("--penalty", choices=["scad", "mcp"], default="scad")
    ap.add_argument("--gamma", type=float, default=None, help="concavity (default 3.7 SCAD, 3 MCP)")
    ap.add_argument("--theta", type=float, default=1.0)
    ap.add_argument("--tol", type=float, default=None, help="ADMM residual tolerance (both)")
    ap.add_argument("--max-iters", type=int, default=2000)
    ap.add_argument("--refit", action="store_true", help="refit coefficients on the identified clusters")
    ap.add_argument("--rescale", nargs=2, type=float, metavar=("H", "V"), default=None)
    ap.add_argument("--knot-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scvcm", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic dataset and its truth")
    sim.add_argument("--pattern", choices=[p.value for p in Pattern], default="mst-equal")
    sim.add_argument("--study", choices=[s.value for s in Study], default="constant")
    sim.add_argument("--n", type=int, default=300)
    sim.add_argument("--phi", type=float, default=0.1)
    sim.add_argument("--noise-sd", type=float, default=0.1)
    sim.add_argument("--delta", type=float, default=None, help="boundary tolerance")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", type=Path, required=True, help="output directory")

    f = sub.add_parser("fit", help="fit one model to a dataset CSV")
    f.add_argument("data", type=Path)
    f.add_argument("--method", choices=["scvc", "pse", "scc-star", "gwr"], default="scvc")
    f.add_argument("--lambda", dest="lam", type=float, nargs="+", default=None)
    f.add_argument("--rho", type=float, nargs="+", default=None)
    f.add_argument("--bandwidth", type=float, default=None)
    f.add_argument("--tune", action="store_true")
    f.add_argument("--strict", action="store_true", help="exit 1 if ADMM does not converge")
    f.add_argument("--max-n", type=int, default=GWR_MAX_N)
    f.add_argument("--out", type=Path, required=True)
    f.add_argument("--plot-data", type=Path, default=None)
    _add_model_flags(f)

    t = sub.add_parser("tune", help="BIC-tune and fit the clustered model")
    t.add_argument("data", type=Path)
    t.add_argument("--grid-lambda", type=float, nargs="+", default=list(GRID_LAMBDA))
    t.add_argument("--grid-rho", type=float, nargs="+", default=list(GRID_RHO))
    t.add_argument("--nm-iters", type=int, default=50)
    t.add_argument("--out", type=Path, required=True)
    t.add_argument("--trace", type=Path, default=None)
    t.add_argument("--plot-data", type=Path, default=None)
    _add_model_flags(t)

    b = sub.add_parser("benchmark", help="replicated comparison on simulated data")
    b.add_argument("--pattern", choices=[p.value for p in Pattern], default="mst-equal")
    b.add_argument("--study", choices=[s.value for s in Study], default="constant")
    b.add_argument("--n", type=int, default=300)
    b.add_argument("--phi", type=float, default=0.1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--replicates", type=int, default=20)
    b.add_argument("--methods", nargs="+", choices=list(METHODS), default=list(METHODS))
    b.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    b.add_argument("--redraw-unequal", action="store_true",
                   help="redraw seeds until within-band MST components equal the bands")
    b.add_argument("--max-n", type=int, default=GWR_MAX_N)
    b.add_argument("--out", type=Path, required=True, help="output directory")
    return ap


def _scenario(args) -> ScenarioConfig:
    if args.n < MIN_N:
        raise UsageError(f"--n must be at least {MIN_N} (got {args.n})")
    try:
        return ScenarioConfig(n=args.n, pattern=args.pattern, study=args.study, phi=args.phi,
                              noise_sd=getattr(args, "noise_sd", 0.1),
                              delta_tol=getattr(args, "delta", None), seed=args.seed)
    except SCVCError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    if not args.data.is_file():
        raise UsageError(f"no such file: {args.data}")
    data = io.read_dataset_csv(args.data)
    if args.rescale is not None:
        data = data.rescaled(*args.rescale)
    return data


def _vector(values, p, name):
    if values is None:
        return None
    vals = np.asarray(values, dtype=float)
    if vals.size == 1:
        vals = np.full(p, vals[0])
    if vals.size != p:
        raise UsageError(f"--{name} needs 1 or {p} values")
    return vals


def _write_outputs(args, data, result, method, extra=None):
    args.out.parent.mkdir(parents=True, exist_ok=True)
    io.write_json(io.result_to_dict(result, method, extra), args.out)
    if getattr(args, "plot_data", None):
        io.write_plot_csv(data, result, args.plot_data)


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    data, truth = make_dataset(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    io.write_dataset_csv(data, args.out / "data.csv")
    io.write_json(io.truth_to_dict(truth, cfg), args.out / "truth.json")
    print(args.out / "data.csv")
    print(args.out / "truth.json")
    return 0


def _search(args) -> SearchConfig:
    return SearchConfig(
        grid_lambda=tuple(getattr(args, "grid_lambda", GRID_LAMBDA)),
        grid_rho=tuple(getattr(args, "grid_rho", GRID_RHO)),
        max_iters=getattr(args, "nm_iters", 50),
        gamma=args.gamma, theta=args.theta, admm_tol=args.tol,
        admm_max_iters=args.max_iters, refit=args.refit,
    )


def cmd_fit(args) -> int:
    data = _load(args)
    p = data.p
    lam = _vector(args.lam, p, "lambda")
    rho = _vector(args.rho, p, "rho")
    mst = euclidean_mst(data.coords)
    if args.method == "gwr":
        bw = args.bandwidth if args.bandwidth else gwr_cv_bandwidth(data, max_n=args.max_n)
        _write_outputs(args, data, gwr(data, GwrConfig(bw), max_n=args.max_n), "gwr")
        return 0
    if args.method == "scc-star":
        if lam is None or args.tune:
            res, lam = tune_scc_star(data, mst, gamma=args.gamma or 3.7)
        else:
            res = scc_star(data, mst, lam, gamma=args.gamma or 3.7, theta=args.theta,
                           max_iters=args.max_iters, tol=args.tol)
        _write_outputs(args, data, res, "scc-star")
        return 0
    basis = build_basis(data.coords, seed=args.knot_seed)
    if args.method == "pse":
        res = tune_pse(data, basis) if (rho is None or args.tune) else pse(data, basis, rho)
        _write_outputs(args, data, res, "pse")
        return 0
    if args.tune:
        tuned = tune(data, basis, mst, args.penalty, _search(args))
        _write_outputs(args, data, tuned.fit, "scvc", {"bic": tuned.report.bic, "df": tuned.report.df})
        return 0
    if lam is None or rho is None:
        raise UsageError("--lambda and --rho are required unless --tune is given")
    try:
        pens = [PenaltyConfig(args.penalty, float(v), args.gamma) for v in lam]
        spec = ProblemSpec(data, basis, mst, pens, rho, theta=args.theta, tol_primal=args.tol,
                           tol_dual=args.tol, max_iters=args.max_iters)
    except SCVCError as exc:
        raise UsageError(str(exc)) from None
    try:
        res = fit(spec, refit=args.refit, strict=args.strict)
    except NotConverged as exc:
        _write_outputs(args, data, exc.result, "scvc")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("converged=%s after %d iterations", res.converged, res.iterations)
    _write_outputs(args, data, res, "scvc")
    return 0


def cmd_tune(args) -> int:
    data = _load(args)
    basis = build_basis(data.coords, seed=args.knot_seed)
    mst = euclidean_mst(data.coords)
    tuned = tune(data, basis, mst, args.penalty, _search(args))
    _write_outputs(args, data, tuned.fit, "scvc", {
        "bic": tuned.report.bic, "df": tuned.report.df,
        "nm_iterations": tuned.nm_iterations, "nm_evaluations": tuned.nm_evaluations,
    })
    if args.trace:
        io.write_trace_csv(tuned.trace, data.p, args.trace)
    print(f"lambda={tuned.lambdas.tolist()} rho={tuned.rhos.tolist()} bic={tuned.report.bic:.4f}",
          file=sys.stderr)
    return 0


def cmd_benchmark(args) -> int:
    cfg = _scenario(args)
    if args.replicates < 1:
        raise UsageError("--replicates must be at least 1")
    args.out.mkdir(parents=True, exist_ok=True)
    rows = run_benchmark(cfg, args.replicates, args.methods, jobs=args.jobs,
                         redraw_unequal=args.redraw_unequal, gwr_max_n=args.max_n,
                         progress=lambda r: print(f"replicate {r} done", file=sys.stderr))
    io.write_rows_csv(rows, args.out / "replicates.csv")
    io.write_rows_csv(aggregate(rows), args.out / "summary.csv")
    print(args.out / "summary.csv")
    return 0 if any(not r.get("error") for r in rows) else 1


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "tune": cmd_tune, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except SCVCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
