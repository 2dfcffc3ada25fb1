"""Replicated simulation runs comparing the clustered model with baselines."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .baselines import GwrConfig, gwr, gwr_cv_bandwidth, tune_pse, tune_scc_star
from .basis import build_basis
from .exceptions import SCVCError
from .metrics import mse_beta, rand_index
from .simulation import Pattern, ScenarioConfig, make_dataset, make_mst_equal_dataset
from .tuning import SearchConfig, tune

log = logging.getLogger(__name__)

METHODS = ("scvc", "scc-star", "pse", "gwr")
SEED_STRIDE = 7919


def replicate_seed(base_seed: int, rep: int) -> int:
    return int(base_seed) + SEED_STRIDE * rep


def simulate(config: ScenarioConfig, redraw_unequal: bool = False):
    """Dataset and truth; optionally redraw until the MST-equal property holds."""
    if redraw_unequal and config.pattern is Pattern.MST_EQUAL:
        data, truth, _ = make_mst_equal_dataset(config)
        return data, truth
    return make_dataset(config)


def run_method(method: str, data, truth, search: SearchConfig | None = None, gwr_max_n=5000) -> dict:
    """Fit one method and score it against the truth."""
    p = data.p
    start = time.perf_counter()
    info: dict = {}
    if method == "scvc":
        basis = build_basis(data.coords)
        tuned = tune(data, basis, truth.mst, search=search)
        fitted = tuned.fit
        info["nm_iterations"] = tuned.nm_iterations
    elif method == "scc-star":
        fitted, _ = tune_scc_star(data, truth.mst)
    elif method == "pse":
        fitted = tune_pse(data, build_basis(data.coords))
    elif method == "gwr":
        bw = gwr_cv_bandwidth(data, max_n=gwr_max_n)
        fitted = gwr(data, GwrConfig(bw), max_n=gwr_max_n)
    else:
        raise ValueError(f"unknown method {method!r}")
    row = {"method": method, "seconds": time.perf_counter() - start}
    mse = mse_beta(fitted.beta_hat, truth.beta)
    parts = getattr(fitted, "partitions", None)
    for k in range(p):
        row[f"mse{k + 1}"] = float(mse[k])
        if parts is None:
            row[f"ri{k + 1}"] = np.nan
            row[f"ic{k + 1}"] = np.nan
        else:
            row[f"ri{k + 1}"] = rand_index(parts[k], truth.subregions[k])
            row[f"ic{k + 1}"] = parts[k].cluster_count
    row.update(info)
    return row


def run_replicate(args) -> list[dict]:
    config, methods, rep, redraw, search, gwr_max_n = args
    try:
        data, truth = simulate(config, redraw)
    except SCVCError as exc:
        return [{"method": m, "replicate": rep, "seed": config.seed, "error": str(exc)} for m in methods]
    rows = []
    for method in methods:
        try:
            row = run_method(method, data, truth, search, gwr_max_n)
            row["error"] = ""
        except SCVCError as exc:
            log.warning("replicate %d, %s failed: %s", rep, method, exc)
            row = {"method": method, "error": str(exc)}
        row.update(replicate=rep, seed=config.seed)
        rows.append(row)
    return rows


def run_benchmark(base: ScenarioConfig, replicates: int, methods=METHODS, jobs: int = 1,
                  redraw_unequal: bool = False, search: SearchConfig | None = None,
                  gwr_max_n: int | None = 5000, progress=None) -> list[dict]:
    """Per-(method, replicate) rows; replicate ``r`` uses seed ``base.seed + r * stride``."""
    tasks = []
    for rep in range(replicates):
        cfg = ScenarioConfig(base.n, base.pattern, base.study, base.phi, base.noise_sd,
                             base.delta_tol, replicate_seed(base.seed, rep))
        tasks.append((cfg, tuple(methods), rep, redraw_unequal, search, gwr_max_n))
    rows: list[dict] = []
    if jobs <= 1:
        for t in tasks:
            rows.extend(run_replicate(t))
            if progress:
                progress(t[2])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for t, out in zip(tasks, pool.map(run_replicate, tasks)):
                rows.extend(out)
                if progress:
                    progress(t[2])
    return rows


def aggregate(rows: list[dict], p: int = 2) -> list[dict]:
    """Mean and standard error per method; MSE scaled by 10, RI by 100."""
    out = []
    methods = [m for m in METHODS if any(r["method"] == m for r in rows)]
    methods += sorted({r["method"] for r in rows} - set(methods))
    for method in methods:
        ok = [r for r in rows if r["method"] == method and not r.get("error")]
        agg = {"method": method, "replicates": len(ok),
               "failures": sum(1 for r in rows if r["method"] == method and r.get("error"))}
        for k in range(1, p + 1):
            for key, scale in ((f"mse{k}", 10.0), (f"ri{k}", 100.0), (f"ic{k}", 1.0)):
                vals = np.array([r.get(key, np.nan) for r in ok], dtype=float) * scale
                vals = vals[np.isfinite(vals)]
                agg[f"{key}_mean"] = float(vals.mean()) if vals.size else np.nan
                agg[f"{key}_se"] = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else np.nan
        out.append(agg)
    return out
