"""File formats: dataset CSV, result and truth JSON, trace and benchmark CSV."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .admm import FitResult
from .data import SpatialDataset
from .exceptions import ValidationError
from .graph import MstGraph, Partition

SCHEMA = 1


def _fmt(x) -> str:
    return repr(float(x))


def write_dataset_csv(dataset: SpatialDataset, path) -> None:
    p = dataset.p
    header = ["s1", "s2"] + [f"x{k + 1}" for k in range(p)] + ["y"]
    rows = np.column_stack([dataset.coords, dataset.X, dataset.y])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_dataset_csv(path) -> SpatialDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        p = len(header) - 3
        expected = ["s1", "s2"] + [f"x{k + 1}" for k in range(p)] + ["y"]
        if p < 1 or header != expected:
            raise ValidationError(f"{path}: header must be s1,s2,x1,...,xp,y; got {','.join(header)}")
        try:
            rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
        except ValueError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] != p + 3:
        raise ValidationError(f"{path}: expected {p + 3} columns per row")
    return SpatialDataset(rows[:, :2], rows[:, 2:2 + p], rows[:, -1])


def _labels(partitions):
    return None if partitions is None else [part.labels.tolist() for part in partitions]


def result_to_dict(result, method: str = "scvc", extra: dict | None = None) -> dict:
    """JSON-ready dict for an SCVC :class:`FitResult` or a baseline fit."""
    out = {
        "schema": SCHEMA,
        "method": method,
        "beta_hat": np.asarray(result.beta_hat).tolist(),
        "labels": _labels(getattr(result, "partitions", None)),
    }
    if isinstance(result, FitResult):
        out.update(
            coefficients=result.coefficients.tolist(),
            lambdas=result.lambdas.tolist(),
            rhos=result.rhos.tolist(),
            theta=result.theta,
            iterations=result.iterations,
            converged=bool(result.converged),
            objective=result.objective,
            primal_history=list(map(float, result.primal_history)),
            dual_history=list(map(float, result.dual_history)),
            objective_increases=result.objective_increases,
            eta_hat=result.eta_hat.tolist(),
            upsilon_hat=result.upsilon_hat.tolist(),
            solver=result.solver,
        )
    else:
        coef = getattr(result, "coefficients", None)
        out["coefficients"] = None if coef is None else np.asarray(coef).tolist()
        out["params"] = {k: np.asarray(v).tolist() for k, v in (result.params or {}).items()}
    if extra:
        out.update(extra)
    return out


def result_from_dict(d: dict) -> FitResult:
    if d.get("schema") != SCHEMA:
        raise ValidationError(f"unsupported result schema {d.get('schema')!r}")
    if "iterations" not in d:
        raise ValidationError("baseline results do not carry an ADMM state")
    return FitResult(
        coefficients=np.array(d["coefficients"], dtype=float),
        beta_hat=np.array(d["beta_hat"], dtype=float),
        partitions=[Partition(np.array(lab)) for lab in d["labels"]],
        eta_hat=np.array(d["eta_hat"], dtype=float),
        upsilon_hat=np.array(d["upsilon_hat"], dtype=float),
        converged=bool(d["converged"]),
        iterations=int(d["iterations"]),
        objective=float(d["objective"]),
        lambdas=np.array(d["lambdas"], dtype=float),
        rhos=np.array(d["rhos"], dtype=float),
        theta=float(d["theta"]),
        primal_history=list(d["primal_history"]),
        dual_history=list(d["dual_history"]),
        objective_increases=int(d.get("objective_increases", 0)),
        solver=d.get("solver", ""),
    )


def write_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def truth_to_dict(truth, config=None) -> dict:
    return {
        "schema": SCHEMA,
        "beta": truth.beta.tolist(),
        "bands": truth.bands.tolist(),
        "subregion_labels": _labels(truth.subregions),
        "spaneigh_labels": _labels(truth.spaneigh),
        "seed": truth.seed,
        "config": None if config is None else config.to_dict(),
    }


def write_plot_csv(dataset: SpatialDataset, result, path) -> None:
    """Per-location estimates and cluster labels for plotting."""
    p = dataset.p
    parts = getattr(result, "partitions", None)
    header = ["s1", "s2"] + [f"beta{k + 1}" for k in range(p)]
    if parts is not None:
        header += [f"cluster{k + 1}" for k in range(p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(dataset.n):
            row = [_fmt(dataset.coords[i, 0]), _fmt(dataset.coords[i, 1])]
            row += [_fmt(v) for v in result.beta_hat[i]]
            if parts is not None:
                row += [int(part.labels[i]) for part in parts]
            w.writerow(row)


def write_mst_csv(mst: MstGraph, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "weight"])
        for (i, j), wt in zip(mst.edges, mst.weights):
            w.writerow([int(i), int(j), _fmt(wt)])


def write_trace_csv(trace, p: int, path) -> None:
    header = (["stage"] + [f"lambda{k + 1}" for k in range(p)] + [f"rho{k + 1}" for k in range(p)]
              + ["bic", "df"] + [f"ic{k + 1}" for k in range(p)] + ["iterations", "converged", "error"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in trace:
            ic = list(row.cluster_counts) or [""] * p
            w.writerow([row.stage] + [_fmt(v) for v in row.lambdas] + [_fmt(v) for v in row.rhos]
                       + [_fmt(row.bic), _fmt(row.df)] + ic
                       + [row.iterations, int(row.converged), row.error])


def write_rows_csv(rows: list[dict], path) -> None:
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    fields = list(rows[0])
    for row in rows[1:]:
        fields += [k for k in row if k not in fields]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
