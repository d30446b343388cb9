"""Command-line harness.

    tscontrol run SCENARIO.yaml --out runs.csv
    tscontrol sweep SCENARIO.yaml --out grid.csv --jobs 4
    tscontrol validate [--quick]
    tscontrol show runs.csv

Exit codes: 0 on success, 1 when a validation check or a controller run
fails (or `show` finds a bound violation), 2 on configuration errors.
"""

from __future__ import annotations

import sys
from collections import defaultdict

import click

from .config import ConfigError, load_scenario
from .harness import CSV_COLUMNS, read_csv, run_scenario
from .validate import format_results, run_validation

_run_options = [
    click.option("--out", default="runs.csv", show_default=True, help="output CSV path"),
    click.option("--seed-offset", default=0, show_default=True, help="added to every seed"),
    click.option("--tol", default=None, type=float, help="solver tolerance override"),
    click.option(
        "--dump-trajectories",
        "dump_dir",
        default=None,
        type=click.Path(file_okay=False),
        help="directory for per-run trajectory files",
    ),
    click.option("--jobs", default=1, show_default=True, help="parallel worker processes"),
    click.option("--backend", default=None, type=click.Choice(["numba", "numpy"]),
                 help="iteration backend (default: numba when available)"),
]


def _with_run_options(fn):
    for opt in reversed(_run_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Two-timescale control scenarios: run, sweep, validate, inspect."""


def _execute(config, use_sweep, **kw):
    try:
        cfg = load_scenario(config)
        records = run_scenario(cfg, kw["out"], seed_offset=kw["seed_offset"],
                               tol=kw["tol"], backend=kw["backend"],
                               dump_dir=kw["dump_dir"], jobs=kw["jobs"],
                               use_sweep=use_sweep)
    except ConfigError as e:
        click.echo(f"configuration error: {e}", err=True)
        sys.exit(2)
    errors = [r for r in records if r.error]
    click.echo(f"wrote {len(records)} records to {kw['out']}")
    if errors:
        for r in errors:
            click.echo(f"  {r.scenario} seed={r.seed} {r.controller}: {r.error}", err=True)
        sys.exit(1)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_with_run_options
def run(config, **kw):
    """Execute a scenario at its base point (the sweep grid is ignored)."""
    _execute(config, use_sweep=False, **kw)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_with_run_options
def sweep(config, **kw):
    """Execute the full sweep grid of a scenario."""
    try:
        cfg = load_scenario(config)
        if not cfg.sweep:
            raise ConfigError("scenario has no sweep section; use `run` instead")
    except ConfigError as e:
        click.echo(f"configuration error: {e}", err=True)
        sys.exit(2)
    _execute(config, use_sweep=True, **kw)


@main.command()
@click.option("--quick", is_flag=True, help="smaller corpora, same coverage")
@click.option("--backend", default=None, type=click.Choice(["numba", "numpy"]))
def validate(quick, backend):
    """Run the standing invariant suite; exit 1 on any failure."""
    results = run_validation(quick=quick, backend=backend)
    click.echo(format_results(results))
    if any(not r.ok for r in results):
        sys.exit(1)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
def show(csv_path):
    """Summarize a record CSV and re-audit the bound columns."""
    try:
        rows = read_csv(csv_path)
    except ValueError as e:
        click.echo(str(e), err=True)
        sys.exit(2)

    def fnum(row, col):
        return float(row[col]) if row[col] else None

    groups = defaultdict(list)
    for row in rows:
        groups[(row["scenario"], row["controller"])].append(row)

    click.echo(f"{len(rows)} records, {len(groups)} scenario/controller groups")
    header = f"{'scenario':<40} {'controller':<12} {'runs':>4} {'mean cost':>12} {'mean cr':>9} {'errors':>6}"
    click.echo(header)
    click.echo("-" * len(header))
    violations = 0
    for (scenario, controller), rs in sorted(groups.items()):
        costs = [fnum(r, "total_cost") for r in rs if r["total_cost"]]
        crs = [fnum(r, "emp_cr") for r in rs if r["emp_cr"]]
        errs = sum(1 for r in rs if r["error"])
        mean_cost = sum(costs) / len(costs) if costs else float("nan")
        mean_cr = f"{sum(crs) / len(crs):9.4f}" if crs else "        -"
        click.echo(f"{scenario:<40} {controller:<12} {len(rs):>4} {mean_cost:>12.4f} {mean_cr} {errs:>6}")
        for r in rs:
            total, opt = fnum(r, "total_cost"), fnum(r, "opt_cost")
            gap = fnum(r, "solver_gap") or 0.0
            slack = 10.0 * gap
            f2, a2 = fnum(r, "thm2_factor"), fnum(r, "thm2_additive")
            if None not in (total, opt, f2, a2) and total > f2 * opt + a2 + slack:
                violations += 1
            b1 = fnum(r, "thm1_bound")
            if None not in (total, b1) and total > b1 + slack:
                violations += 1
            lb = fnum(r, "lemma2_lb")
            if None not in (lb, total) and r["controller"] == "offline_opt" and lb > total + slack:
                violations += 1
    if violations:
        click.echo(f"{violations} bound violations found", err=True)
        sys.exit(1)
    click.echo("no bound violations")


if __name__ == "__main__":
    main()
