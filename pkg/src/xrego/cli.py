"""Command-line interface: gen, run, validate, profile, replay."""

from __future__ import annotations

import csv
import json
import os
import sys

import click

from . import harness, theory
from .problems import default_manifest, write_manifest


@click.group()
def main():
    """Random-embedding global optimization toolkit."""


@main.command()
@click.option("--dims", default="10,100", show_default=True,
              help="Comma-separated ambient dimensions.")
@click.option("--seed", type=int, required=True, help="Master seed.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Manifest JSON path.")
def gen(dims, seed, out):
    """Emit the synthetic problem manifest for a seed."""
    dim_list = [int(v) for v in dims.split(",") if v.strip()]
    manifest = default_manifest(dim_list, seed)
    write_manifest(manifest, out)
    click.echo(f"wrote {len(manifest)} problem entries to {out}")


@main.command(name="run")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON plan config; defaults apply to omitted fields.")
@click.option("--seed", type=int, required=True, help="Master seed.")
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Output directory.")
@click.option("--workers", type=int, default=None,
              help=f"Worker processes (default: ${harness.WORKERS_ENV} or 1).")
def run_cmd(config, seed, out, workers):
    """Execute an experiment plan and write results, medians, profiles."""
    cfg = {}
    if config:
        with open(config) as fh:
            cfg = json.load(fh)
    plan = harness.plan_from_dict(cfg)
    table = harness.run_plan(plan, seed, workers)
    violations = harness.verify_rows(table.rows)
    panels = harness.profile_panels(table.cells)
    written = harness.emit(table, panels, out)
    meta = {
        "master_seed": seed,
        "plan": harness.plan_to_dict(plan),
        "cells": len(table.cells),
        "failures": [
            {"problem": c.problem, "D": c.D, "d": c.d, "variant": c.variant,
             "solver": c.solver, "rep": c.rep, "error": c.error}
            for c in table.failures
        ],
        "invariant_violations": violations,
    }
    meta_path = os.path.join(out, "meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    written["meta.json"] = meta_path
    for name, path in sorted(written.items()):
        click.echo(f"wrote {path}")
    solved = sum(c.solved for c in table.cells)
    click.echo(f"{len(table.cells)} cells, {solved} solved, "
               f"{len(table.failures)} failed")
    for v in violations:
        click.echo(f"invariant violation: {v}", err=True)
    for c in table.failures:
        click.echo(f"cell failure: {c.problem} D={c.D} {c.variant}/{c.solver} "
                   f"rep={c.rep}: {c.error}", err=True)
    if table.failures or violations:
        sys.exit(1)


@main.command()
@click.option("--seed", type=int, default=1234, show_default=True)
@click.option("--quick", is_flag=True, help="Smaller sample sizes, skips the "
              "convergence-curve run.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Optional directory for report.txt/report.csv.")
def validate(seed, quick, out):
    """Run the statistical and numerical validation suite."""
    report = theory.validation_suite(seed, quick=quick)
    click.echo(report.to_text())
    if out:
        os.makedirs(out, exist_ok=True)
        txt = os.path.join(out, "report.txt")
        with open(txt, "w") as fh:
            fh.write(report.to_text() + "\n")
        rows = report.to_csv_rows()
        csv_path = os.path.join(out, "report.csv")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        click.echo(f"wrote {txt}")
        click.echo(f"wrote {csv_path}")
    if not report.passed:
        sys.exit(1)


@main.command()
@click.option("--results", type=click.Path(exists=True, dir_okay=False),
              required=True, help="results.csv from a previous run.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def profile(results, out):
    """Rebuild medians and performance profiles from a results table."""
    with open(results, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise click.ClickException(f"{results} has no data rows")
    cells = harness.cells_from_rows(rows)
    panels = harness.profile_panels(cells)
    table = harness.ResultTable(rows=rows, cells=cells)
    written = harness.emit(table, panels, out)
    for name, path in sorted(written.items()):
        click.echo(f"wrote {path}")


@main.command()
@click.option("--meta", type=click.Path(exists=True, dir_okay=False), required=True,
              help="meta.json of the run to replay.")
@click.option("--problem", required=True)
@click.option("--dim", "dim", type=int, required=True, help="Ambient dimension D.")
@click.option("--variant", required=True)
@click.option("--solver", required=True)
@click.option("--rep", type=int, required=True)
@click.option("--d", "d_reduced", type=int, default=None,
              help="Reduced dimension, needed only if the plan swept d.")
def replay(meta, problem, dim, variant, solver, rep, d_reduced):
    """Re-run a single cell by seed and compare against stored results."""
    with open(meta) as fh:
        info = json.load(fh)
    plan = harness.plan_from_dict(info["plan"])
    cells = harness.plan_cells(plan, info["master_seed"])
    matches = [
        c for c in cells
        if c.problem == problem and c.D == dim and c.variant == variant
        and c.solver_kind == solver and c.rep == rep
        and (d_reduced is None or c.d == d_reduced)
    ]
    if not matches:
        raise click.ClickException("no cell in the plan matches those coordinates")
    if len(matches) > 1:
        ds = sorted(c.d for c in matches)
        raise click.ClickException(f"ambiguous cell; pass --d (one of {ds})")
    rows, cell = harness.execute_cell(matches[0])
    if cell.error:
        raise click.ClickException(f"replayed cell failed: {cell.error}")
    fresh = [harness.format_row(r) for r in rows]
    for r in fresh:
        click.echo(",".join(r[c] for c in harness.CSV_COLUMNS))
    results_path = os.path.join(os.path.dirname(os.path.abspath(meta)), "results.csv")
    if not os.path.exists(results_path):
        click.echo("no results.csv beside meta.json; skipped comparison")
        return
    with open(results_path, newline="") as fh:
        stored = [
            {k: r[k] for k in harness.CSV_COLUMNS}
            for r in csv.DictReader(fh)
            if r["problem"] == problem and int(r["D"]) == dim
            and r["variant"] == variant and r["solver"] == solver
            and int(r["rep"]) == rep
            and (d_reduced is None or int(r["d"]) == d_reduced)
        ]
    if fresh == stored:
        click.echo("replay matches stored results")
    else:
        click.echo("replay DIFFERS from stored results", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
