"""Scenario execution: controllers -> per-run records -> CSV.

One record per (sweep point, seed, controller). The CSV layout is part of
the external contract: fixed header, full-precision floats (%.17g), empty
cells for fields that do not apply to a row. Reruns with the same scenario
and seeds are byte-identical; a sidecar .meta.json records the RNG
algorithm, solver tolerance, and backend so results can be traced.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import lemma2_lower_bound, thm1_report, thm2_report
from .config import ScenarioConfig, expand_sweep, validate_point
from .controllers import run_mrpc, run_offline_opt, run_zero_slow
from .noise import RNG_ALGORITHM, generate_noise, generate_predictions, prediction_error
from .soco import run_afhc, run_fhc, soco_offline_opt, soco_reduce
from .solver import DEFAULT_TOL, resolve_backend
from .system import QuadFloor, Trajectory, trajectory_cost

CSV_COLUMNS = [
    "scenario", "seed", "controller", "T", "k", "n",
    "total_cost", "per_step_cost", "opt_cost",
    "thm2_factor", "thm2_additive", "thm1_bound", "lemma2_lb",
    "emp_cr", "pred_error", "solver_gap", "error",
]


@dataclass
class RunRecord:
    scenario: str
    seed: int
    controller: str
    T: int
    k: int
    n: int
    total_cost: float | None = None
    per_step_cost: float | None = None
    opt_cost: float | None = None
    thm2_factor: float | None = None
    thm2_additive: float | None = None
    thm1_bound: float | None = None
    lemma2_lb: float | None = None
    emp_cr: float | None = None
    pred_error: float | None = None
    solver_gap: float | None = None
    error: str = ""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(records: list[RunRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}")
        return list(reader)


def dump_trajectory(path: str, traj: Trajectory) -> None:
    """Per-step state/action table; costs are re-derivable from this file."""
    n = traj.n
    header = (
        ["t"]
        + [f"x{i+1}" for i in range(n)]
        + [f"f{i+1}" for i in range(n)]
        + [f"s{i+1}" for i in range(n)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(1, traj.T + 1):
            row = [str(t)]
            row += [_fmt(float(v)) for v in traj.x[t]]
            row += [_fmt(float(v)) for v in traj.f[t - 1]]
            row += [_fmt(float(v)) for v in traj.s[t - 1]]
            writer.writerow(row)


def load_trajectory(path: str) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    n = (len(header) - 1) // 3
    T = len(data)
    x = np.zeros((T + 1, n))
    f = np.zeros((T, n))
    s = np.zeros((T, n))
    for t, row in enumerate(data, start=1):
        vals = [float(v) for v in row[1:]]
        x[t] = vals[:n]
        f[t - 1] = vals[n : 2 * n]
        s[t - 1] = vals[2 * n :]
    return Trajectory(x=x, f=f, s=s)


def run_point(
    label: str,
    merged: dict,
    seed: int,
    tol: float | None = None,
    backend: str | None = None,
    dump_dir: str | None = None,
    dump_prefix: str = "",
):
    """Execute all controllers of one scenario point for one seed."""
    spec, costs, noise_model, pred_model, controllers = validate_point(merged)
    tol = DEFAULT_TOL if tol is None else tol
    w = generate_noise(noise_model, spec, [seed, 0])
    what = None
    if any(c["type"] == "mrpc" for c in controllers):
        what = generate_predictions(pred_model, w, costs.cf, [seed, 1])

    types = [c["type"] for c in controllers]
    opt_run = None
    if "offline_opt" in types:
        opt_run = run_offline_opt(spec, costs, w, tol=tol, backend=backend)
    soco_problem = None
    soco_opt = None
    if any(t in ("afhc", "fhc") for t in types):
        soco_problem, _ = soco_reduce(spec, costs, w)
        soco_opt = soco_offline_opt(soco_problem, tol=tol, backend=backend)

    base = dict(seed=seed, T=spec.T, k=spec.k, n=spec.n, scenario=label)
    records = []
    for entry in controllers:
        ctype = entry["type"]
        rec = RunRecord(controller=ctype, **base)
        try:
            if ctype == "offline_opt":
                run = opt_run
                if costs.all_norms():
                    rec.lemma2_lb, _ = lemma2_lower_bound(spec, costs, w, tol=tol, backend=backend)
            elif ctype == "mrpc":
                run = run_mrpc(spec, costs, w, what, tol=tol, backend=backend)
                rec.pred_error = prediction_error(w, what, costs.cf)
                if opt_run is not None:
                    rep = thm2_report(spec, costs, run, opt_run, w, what)
                    rec.thm2_factor = rep.details["factor"]
                    rec.thm2_additive = rep.details["additive"]
            elif ctype == "zero_slow":
                run = run_zero_slow(spec, costs, w)
            elif ctype == "afhc":
                run = run_afhc(soco_problem, entry["lookahead"], tol=tol, backend=backend)
                if isinstance(costs.cx, QuadFloor) and costs.cx.c0 > 0:
                    rep = thm1_report(soco_problem, entry["lookahead"], run, soco_opt)
                    rec.thm1_bound = rep.rhs
            elif ctype == "fhc":
                run = run_fhc(
                    soco_problem, entry["lookahead"], entry.get("phase", 1),
                    tol=tol, backend=backend,
                )
            else:  # pragma: no cover - validate_controllers guards this
                raise ValueError(f"unknown controller {ctype}")

            rec.controller = run.name
            rec.total_cost = run.total_cost
            rec.per_step_cost = run.per_step_cost
            rec.solver_gap = run.solver_gap
            ref = soco_opt if ctype in ("afhc", "fhc") else opt_run
            if ref is not None:
                rec.opt_cost = ref.total_cost
                if ref.total_cost > 1e-12:
                    rec.emp_cr = run.total_cost / ref.total_cost
            if dump_dir is not None and hasattr(run, "trajectory"):
                fname = f"{dump_prefix}s{seed}_{run.name}.csv"
                dump_trajectory(os.path.join(dump_dir, fname), run.trajectory)
        except Exception as e:  # noqa: BLE001 - a failed controller is data
            rec.error = type(e).__name__
        records.append(rec)
    return records


def _run_task(args):
    idx, label, merged, seed, tol, backend, dump_dir, dump_prefix = args
    return idx, run_point(label, merged, seed, tol, backend, dump_dir, dump_prefix)


def run_scenario(
    cfg: ScenarioConfig,
    out_path: str,
    seed_offset: int = 0,
    tol: float | None = None,
    backend: str | None = None,
    dump_dir: str | None = None,
    jobs: int = 1,
    use_sweep: bool = True,
) -> list[RunRecord]:
    """Run every (sweep point, seed) pair and write the record CSV."""
    points = expand_sweep(cfg) if use_sweep else [(cfg.name, {})]
    tasks = []
    for pidx, (label, overrides) in enumerate(points):
        merged = cfg.point(overrides)
        for seed in cfg.seeds:
            s = seed + seed_offset
            prefix = f"pt{pidx}_"
            tasks.append((len(tasks), label, merged, s, tol, backend, dump_dir, prefix))

    if dump_dir is not None:
        os.makedirs(dump_dir, exist_ok=True)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
        results.sort(key=lambda r: r[0])
        records = [rec for _, recs in results for rec in recs]
    else:
        records = []
        for task in tasks:
            records.extend(_run_task(task)[1])

    write_csv(records, out_path)
    meta = {
        "rng": RNG_ALGORITHM,
        "version": __version__,
        "tol": DEFAULT_TOL if tol is None else tol,
        "backend": resolve_backend(backend),
        "seed_offset": seed_offset,
        "points": len(points),
        "seeds": len(cfg.seeds),
    }
    with open(out_path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return records
