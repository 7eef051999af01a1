"""Batch experiment orchestration and reporting.

A plan is a cross product of problems, ambient dimensions, anchor policies,
subproblem solvers, and repetitions, optionally joined by no-embedding
baseline cells where the solver attacks the full-dimensional box directly
through an identity embedding. Every cell owns a deterministic seed derived
from its coordinates, so tables are reproducible cell by cell regardless of
worker count or execution order.

Cost accounting is in objective evaluations for all built-in solvers. A
cell's cost N_p is the cumulative count when the run first entered the
epsilon-neighborhood of the optimum, or everything it spent before giving
up; unsolved cells participate in performance profiles as infinity and in
median tables at their recorded spend.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import statistics
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .driver import (
    ADAPTIVE,
    CSV_COLUMNS,
    LOCAL_ADAPTIVE,
    ORIGIN,
    UNIFORM_RANDOM,
    PPolicy,
    RunConfig,
    SolverFailure,
    run,
    run_record_rows,
)
from .embedcore import Embedding, SeededRng
from .problems import base_names, generate, manifest_seed
from .reduced import make_reduced
from .solvers import (
    DIRECT_GLOBAL,
    MULTI_START_LOCAL,
    SINGLE_START_LOCAL,
    TARGET_REACHED,
    SolverBudget,
    SolverSpec,
    solve,
)

__all__ = [
    "NO_EMBEDDING_VARIANT",
    "WORKERS_ENV",
    "ExperimentPlan",
    "CellSpec",
    "CellResult",
    "ResultTable",
    "ProfileCurve",
    "default_budgets",
    "plan_to_dict",
    "plan_from_dict",
    "plan_cells",
    "execute_cell",
    "run_plan",
    "cells_from_rows",
    "median_table",
    "performance_profile",
    "profile_panels",
    "verify_rows",
    "format_row",
    "emit",
]

NO_EMBEDDING_VARIANT = "none"
WORKERS_ENV = "XREGO_WORKERS"

EMBEDDED = "embedded"
NO_EMBEDDING = "none"


def default_budgets() -> dict:
    """Per-(solver, mode) evaluation caps. The global-solver caps follow the
    reference protocol (3000 per subproblem, 60000 without embedding); the
    local-solver caps are desk-scale choices in the same 20x ratio."""
    return {
        (DIRECT_GLOBAL, EMBEDDED): SolverBudget(3000),
        (DIRECT_GLOBAL, NO_EMBEDDING): SolverBudget(60000),
        (MULTI_START_LOCAL, EMBEDDED): SolverBudget(2000),
        (MULTI_START_LOCAL, NO_EMBEDDING): SolverBudget(60000),
        (SINGLE_START_LOCAL, EMBEDDED): SolverBudget(400),
        (SINGLE_START_LOCAL, NO_EMBEDDING): SolverBudget(60000),
        ("RandomSearch", EMBEDDED): SolverBudget(2000),
        ("RandomSearch", NO_EMBEDDING): SolverBudget(60000),
    }


def _default_variants():
    return (
        PPolicy(ADAPTIVE),
        PPolicy(LOCAL_ADAPTIVE),
        PPolicy(ORIGIN),
        PPolicy(UNIFORM_RANDOM),
    )


@dataclass(frozen=True)
class ExperimentPlan:
    problems: tuple = tuple(base_names())
    dims: tuple = (10, 100)
    variants: tuple = field(default_factory=_default_variants)
    solvers: tuple = (SolverSpec(DIRECT_GLOBAL), SolverSpec(SINGLE_START_LOCAL))
    no_embedding_solvers: tuple = (
        SolverSpec(DIRECT_GLOBAL),
        SolverSpec(MULTI_START_LOCAL, starts=50),
    )
    reps: int = 5
    budgets: dict = field(default_factory=default_budgets)
    include_no_embedding: bool = True
    d_offsets: tuple = (0,)
    K: int = 100
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        for spec in self.solvers:
            if (spec.kind, EMBEDDED) not in self.budgets:
                raise ValueError(f"no embedded budget for solver {spec.kind}")
        if self.include_no_embedding:
            for spec in self.no_embedding_solvers:
                if (spec.kind, NO_EMBEDDING) not in self.budgets:
                    raise ValueError(f"no no-embedding budget for solver {spec.kind}")
        if any(off < 0 for off in self.d_offsets):
            raise ValueError("d offsets must be >= 0")


def plan_to_dict(plan: ExperimentPlan) -> dict:
    """Fully explicit JSON form of a plan, independent of library defaults."""
    budgets: dict = {}
    for (kind, mode), budget in plan.budgets.items():
        budgets.setdefault(kind, {})[mode] = budget.max_evals
    return {
        "problems": list(plan.problems),
        "dims": list(plan.dims),
        "variants": [{"kind": v.kind, "gamma": v.gamma} for v in plan.variants],
        "solvers": [{"kind": s.kind, "starts": s.starts} for s in plan.solvers],
        "no_embedding_solvers": [
            {"kind": s.kind, "starts": s.starts} for s in plan.no_embedding_solvers
        ],
        "reps": plan.reps,
        "budgets": budgets,
        "include_no_embedding": plan.include_no_embedding,
        "d_offsets": list(plan.d_offsets),
        "K": plan.K,
        "epsilon": plan.epsilon,
    }


def plan_from_dict(cfg: dict) -> ExperimentPlan:
    """Build a plan from a config mapping; omitted fields keep defaults and
    budget entries merge over the default table."""
    kwargs: dict = {}
    if "problems" in cfg:
        kwargs["problems"] = tuple(cfg["problems"])
    if "dims" in cfg:
        kwargs["dims"] = tuple(int(v) for v in cfg["dims"])
    if "variants" in cfg:
        variants = []
        for v in cfg["variants"]:
            if isinstance(v, str):
                variants.append(PPolicy(v))
            else:
                variants.append(PPolicy(v["kind"], float(v.get("gamma", 1e-5))))
        kwargs["variants"] = tuple(variants)
    for field_name in ("solvers", "no_embedding_solvers"):
        if field_name in cfg:
            kwargs[field_name] = tuple(
                SolverSpec(s["kind"], starts=int(s.get("starts", 5)))
                if isinstance(s, dict)
                else SolverSpec(s)
                for s in cfg[field_name]
            )
    if "reps" in cfg:
        kwargs["reps"] = int(cfg["reps"])
    budgets = default_budgets()
    for kind, modes in cfg.get("budgets", {}).items():
        for mode, max_evals in modes.items():
            budgets[(kind, mode)] = SolverBudget(int(max_evals))
    kwargs["budgets"] = budgets
    if "include_no_embedding" in cfg:
        kwargs["include_no_embedding"] = bool(cfg["include_no_embedding"])
    if "d_offsets" in cfg:
        kwargs["d_offsets"] = tuple(int(v) for v in cfg["d_offsets"])
    if "K" in cfg:
        kwargs["K"] = int(cfg["K"])
    if "epsilon" in cfg:
        kwargs["epsilon"] = float(cfg["epsilon"])
    return ExperimentPlan(**kwargs)


def _pairs_with(solver_kind: str, variant: PPolicy) -> bool:
    """Canonical variant-solver pairings: the global solver drives the
    plain adaptive and origin variants, the single-start local solver
    drives the two local variants, everything else is unrestricted."""
    if solver_kind == DIRECT_GLOBAL:
        return variant.kind in (ADAPTIVE, ORIGIN)
    if solver_kind == SINGLE_START_LOCAL:
        return variant.kind in (LOCAL_ADAPTIVE, UNIFORM_RANDOM)
    return True


@dataclass(frozen=True)
class CellSpec:
    problem: str
    D: int
    d: int
    variant: str
    gamma: float
    solver_kind: str
    starts: int
    rep: int
    problem_seed: int
    cell_seed: int
    max_evals: int
    K: int
    epsilon: float
    mode: str

    @property
    def key(self) -> tuple:
        return (self.problem, self.D, self.d, self.variant, self.solver_kind, self.rep)


@dataclass(frozen=True)
class CellResult:
    problem: str
    D: int
    d: int
    variant: str
    solver: str
    rep: int
    n_evals: int
    solved: bool
    error: str | None = None

    @property
    def algorithm(self) -> str:
        return f"{self.variant}/{self.solver}"

    @property
    def instance(self) -> tuple:
        return (self.problem, self.rep)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    cells: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [c for c in self.cells if c.error]


def _cell_seed(spec_key: tuple, master_seed: int) -> int:
    tag = ":".join(str(v) for v in spec_key) + f":{master_seed}"
    return int.from_bytes(
        hashlib.blake2b(tag.encode(), digest_size=8).digest(), "big"
    ) >> 1


def plan_cells(plan: ExperimentPlan, master_seed: int) -> list:
    """Expand a plan into the deterministic list of cells to execute."""
    from .problems import base_function

    cells = []
    for name in plan.problems:
        d_e = base_function(name).d_e
        for D in plan.dims:
            pseed = manifest_seed(name, D, master_seed)
            for spec in plan.solvers:
                for variant in plan.variants:
                    if not _pairs_with(spec.kind, variant):
                        continue
                    for off in plan.d_offsets:
                        d = d_e + off
                        for rep in range(plan.reps):
                            key = (name, D, d, variant.kind, spec.kind, rep)
                            cells.append(
                                CellSpec(
                                    problem=name,
                                    D=D,
                                    d=d,
                                    variant=variant.kind,
                                    gamma=variant.gamma,
                                    solver_kind=spec.kind,
                                    starts=spec.starts,
                                    rep=rep,
                                    problem_seed=pseed,
                                    cell_seed=_cell_seed(key, master_seed),
                                    max_evals=plan.budgets[(spec.kind, EMBEDDED)].max_evals,
                                    K=plan.K,
                                    epsilon=plan.epsilon,
                                    mode=EMBEDDED,
                                )
                            )
            if plan.include_no_embedding:
                for spec in plan.no_embedding_solvers:
                    for rep in range(plan.reps):
                        key = (name, D, D, NO_EMBEDDING_VARIANT, spec.kind, rep)
                        cells.append(
                            CellSpec(
                                problem=name,
                                D=D,
                                d=D,
                                variant=NO_EMBEDDING_VARIANT,
                                gamma=1e-5,
                                solver_kind=spec.kind,
                                starts=spec.starts,
                                rep=rep,
                                problem_seed=pseed,
                                cell_seed=_cell_seed(key, master_seed),
                                max_evals=plan.budgets[(spec.kind, NO_EMBEDDING)].max_evals,
                                K=1,
                                epsilon=plan.epsilon,
                                mode=NO_EMBEDDING,
                            )
                        )
    cells.sort(key=lambda c: c.key)
    return cells


def execute_cell(spec: CellSpec) -> tuple:
    """Run one cell. Never raises: failures come back in CellResult.error
    alongside whatever rows completed before the failure."""
    rows: list = []
    try:
        prob = generate(spec.problem, spec.D, spec.problem_seed)
        solver = SolverSpec(spec.solver_kind, starts=spec.starts)
        if spec.mode == NO_EMBEDDING:
            rp = make_reduced(Embedding(np.eye(spec.D), np.zeros(spec.D)), prob)
            budget = SolverBudget(
                spec.max_evals, target_value=prob.f_star + spec.epsilon
            )
            res = solve(rp, solver, budget, rng=SeededRng(spec.cell_seed, 1))
            solved = res.status == TARGET_REACHED
            rows.append(
                {
                    "problem": spec.problem,
                    "D": spec.D,
                    "d": spec.D,
                    "variant": NO_EMBEDDING_VARIANT,
                    "solver": spec.solver_kind,
                    "rep": spec.rep,
                    "k": 1,
                    "f_xk": res.f_best,
                    "f_xopt": res.f_best,
                    "cum_evals": res.evals,
                    "terminated": res.status,
                }
            )
            cell = CellResult(
                spec.problem, spec.D, spec.D, NO_EMBEDDING_VARIANT,
                spec.solver_kind, spec.rep, res.evals, solved,
            )
            return rows, cell
        cfg = RunConfig(
            d=spec.d,
            policy=PPolicy(spec.variant, spec.gamma),
            solver=solver,
            per_embedding_budget=SolverBudget(spec.max_evals),
            master_seed=spec.cell_seed,
            K=spec.K,
            epsilon=spec.epsilon,
        )
        error = None
        try:
            rec = run(prob, cfg)
        except SolverFailure as exc:
            rec = exc.record
            error = str(exc)
        rows = run_record_rows(rec, spec.rep)
        n = rec.steps[-1].cum_evals if rec.steps else 0
        cell = CellResult(
            spec.problem, spec.D, spec.d, spec.variant, spec.solver_kind,
            spec.rep, n, rec.termination[0] == "EpsReached", error,
        )
        return rows, cell
    except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
        cell = CellResult(
            spec.problem, spec.D, spec.d, spec.variant, spec.solver_kind,
            spec.rep, 0, False, f"{type(exc).__name__}: {exc}",
        )
        return rows, cell


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def run_plan(
    plan: ExperimentPlan, master_seed: int, workers: int | None = None
) -> ResultTable:
    """Execute every cell of the plan, in parallel when workers > 1.

    The output is identical for any worker count: cells are seeded from
    their own coordinates and merged in sorted key order.
    """
    cells = plan_cells(plan, master_seed)
    nworkers = _resolve_workers(workers)
    if nworkers == 1:
        outcomes = [execute_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            outcomes = list(pool.map(execute_cell, cells, chunksize=1))
    table = ResultTable()
    for rows, cell in outcomes:
        table.rows.extend(rows)
        table.cells.append(cell)
    return table


# --- reading results back ----------------------------------------------------


def _final_rows(rows: list) -> list:
    finals = [r for r in rows if str(r["terminated"]).strip()]
    finals.sort(
        key=lambda r: (r["problem"], int(r["D"]), int(r["d"]), r["variant"],
                       r["solver"], int(r["rep"]))
    )
    return finals


def cells_from_rows(rows: list) -> list:
    """Reconstruct per-cell summaries from the flat results table; this is
    the no-hidden-state path used by the profile command."""
    cells = []
    for r in _final_rows(rows):
        tag = str(r["terminated"])
        cells.append(
            CellResult(
                problem=str(r["problem"]),
                D=int(r["D"]),
                d=int(r["d"]),
                variant=str(r["variant"]),
                solver=str(r["solver"]),
                rep=int(r["rep"]),
                n_evals=int(r["cum_evals"]),
                solved=tag in ("EpsReached", TARGET_REACHED),
            )
        )
    return cells


def median_table(rows: list) -> list:
    """Per-(problem, D, variant, solver) median cost and solve count over
    repetitions, plus one pooled row per (D, variant, solver) with the
    median over every (problem, rep) cell."""
    cells = cells_from_rows(rows)
    if not cells:
        raise ValueError("no completed cells in results table")
    groups: dict = {}
    pooled: dict = {}
    for c in cells:
        groups.setdefault((c.problem, c.D, c.variant, c.solver), []).append(c)
        pooled.setdefault((c.D, c.variant, c.solver), []).append(c)
    out = []
    for key in sorted(groups):
        cs = groups[key]
        out.append(
            {
                "problem": key[0],
                "D": key[1],
                "variant": key[2],
                "solver": key[3],
                "median_evals": statistics.median(c.n_evals for c in cs),
                "solved": sum(c.solved for c in cs),
                "reps": len(cs),
            }
        )
    for key in sorted(pooled):
        cs = pooled[key]
        out.append(
            {
                "problem": "__all__",
                "D": key[0],
                "variant": key[1],
                "solver": key[2],
                "median_evals": statistics.median(c.n_evals for c in cs),
                "solved": sum(c.solved for c in cs),
                "reps": len(cs),
            }
        )
    return out


# --- performance profiles ----------------------------------------------------


@dataclass(frozen=True)
class ProfileCurve:
    algorithm: str
    points: tuple

    def pi_at(self, alpha: float) -> float:
        pi = 0.0
        for a, v in self.points:
            if a <= alpha:
                pi = v
        return pi


def performance_profile(table: list, algorithms: list) -> list:
    """Dolan-More curves pi_A(alpha) over the instances present in the
    table, one curve per requested algorithm id ("variant/solver").

    The per-instance reference cost is the minimum over the compared
    algorithms; instances nobody solved contribute to the denominator but
    to no numerator, so no curve reaches 1 unless its algorithm solved
    everything.
    """
    if not table:
        raise ValueError("empty results table")
    cost: dict = {}
    instances = set()
    for c in table:
        if c.algorithm not in algorithms:
            continue
        instances.add(c.instance)
        cost[(c.algorithm, c.instance)] = c.n_evals if c.solved else math.inf
    if not instances:
        raise ValueError("no instances match the requested algorithms")
    instances = sorted(instances)
    best = {
        inst: min(cost.get((a, inst), math.inf) for a in algorithms)
        for inst in instances
    }
    if all(v == math.inf for v in best.values()):
        raise ValueError("no instance was solved by any compared algorithm")
    ratios: dict = {}
    alphas = {1.0}
    for a in algorithms:
        rs = []
        for inst in instances:
            c = cost.get((a, inst), math.inf)
            if c == math.inf or best[inst] == math.inf:
                rs.append(math.inf)
            else:
                r = c / best[inst] if best[inst] > 0 else 1.0
                rs.append(r)
                alphas.add(r)
        ratios[a] = rs
    grid = sorted(alphas)
    curves = []
    for a in algorithms:
        rs = np.array(ratios[a])
        pts = tuple((alpha, float((rs <= alpha).mean())) for alpha in grid)
        curves.append(ProfileCurve(algorithm=a, points=pts))
    return curves


def profile_panels(cells: list) -> dict:
    """One profile family per (solver, D): all variants that ran under that
    solver at that dimension, compared on their common instances. Panels
    where no algorithm solved anything are dropped (a curve pinned at zero
    carries no ranking information)."""
    panels: dict = {}
    for c in cells:
        panels.setdefault((c.solver, c.D), []).append(c)
    out = {}
    for key in sorted(panels):
        subset = panels[key]
        algos = sorted({c.algorithm for c in subset})
        try:
            out[key] = performance_profile(subset, algos)
        except ValueError:
            continue
    return out


# --- invariants and emission --------------------------------------------------


def verify_rows(rows: list) -> list:
    """Table-level invariant sweep; returns human-readable violations."""
    problems: dict = {}
    for r in rows:
        cell = (r["problem"], int(r["D"]), int(r["d"]), r["variant"], r["solver"],
                int(r["rep"]))
        problems.setdefault(cell, []).append(r)
    violations = []
    for cell, rs in problems.items():
        rs = sorted(rs, key=lambda r: int(r["k"]))
        ks = [int(r["k"]) for r in rs]
        if ks != list(range(1, len(ks) + 1)):
            violations.append(f"{cell}: non-consecutive k sequence")
        cum = [int(r["cum_evals"]) for r in rs]
        if any(b <= a for a, b in zip(cum, cum[1:])):
            violations.append(f"{cell}: cumulative evals not strictly increasing")
        fopt = [float(r["f_xopt"]) for r in rs]
        if any(b > a + 1e-12 for a, b in zip(fopt, fopt[1:])):
            violations.append(f"{cell}: f_xopt not non-increasing")
        run_min = np.minimum.accumulate([float(r["f_xk"]) for r in rs])
        if not np.allclose(run_min, fopt, rtol=0, atol=1e-12):
            violations.append(f"{cell}: f_xopt disagrees with running minimum")
        tags = [str(r["terminated"]).strip() for r in rs]
        if any(tags[:-1]) or not tags[-1]:
            violations.append(f"{cell}: terminated tag not exactly on final row")
    return violations


def _format_value(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_row(row: dict) -> dict:
    """Canonical string form of a results row, as it appears in the CSV."""
    return {k: _format_value(row[k]) for k in CSV_COLUMNS}


def _csv_bytes(fieldnames, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _format_value(r[k]) for k in fieldnames})
    return buf.getvalue().encode()


def _svg_bytes(panels: dict) -> bytes:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "xrego"}):
        n = len(panels)
        ncols = min(n, 2)
        nrows = (n + ncols - 1) // ncols
        fig, axes = plt.subplots(
            nrows, ncols, figsize=(6 * ncols, 4 * nrows), squeeze=False
        )
        for ax in axes.ravel()[n:]:
            ax.axis("off")
        for ax, (key, curves) in zip(axes.ravel(), sorted(panels.items())):
            solver, D = key
            for curve in curves:
                xs = [a for a, _ in curve.points]
                ys = [v for _, v in curve.points]
                ax.step(xs, ys, where="post", label=curve.algorithm)
            ax.set_xscale("log")
            ax.set_ylim(0, 1.05)
            ax.set_xlabel("performance ratio")
            ax.set_ylabel("fraction of instances")
            ax.set_title(f"{solver}, D={D}")
            ax.legend(fontsize=8)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def emit(table: ResultTable, panels: dict, out_dir: str) -> dict:
    """Write results.csv, medians.csv, profiles.csv, profiles.svg.

    All contents are rendered in memory first and written through temp
    files, so a failure leaves no partial artifact behind.
    """
    if not panels or all(not curves for curves in panels.values()):
        raise ValueError("no profile curves to emit")
    rows = sorted(
        table.rows,
        key=lambda r: (r["problem"], int(r["D"]), int(r["d"]), r["variant"],
                       r["solver"], int(r["rep"]), int(r["k"])),
    )
    profile_rows = []
    for (solver, D), curves in sorted(panels.items()):
        for curve in curves:
            for alpha, pi in curve.points:
                profile_rows.append(
                    {
                        "solver": solver,
                        "D": D,
                        "algorithm": curve.algorithm,
                        "alpha": alpha,
                        "pi": pi,
                    }
                )
    payloads = {
        "results.csv": _csv_bytes(CSV_COLUMNS, rows),
        "medians.csv": _csv_bytes(
            ("problem", "D", "variant", "solver", "median_evals", "solved", "reps"),
            median_table(rows),
        ),
        "profiles.csv": _csv_bytes(
            ("solver", "D", "algorithm", "alpha", "pi"), profile_rows
        ),
        "profiles.svg": _svg_bytes(panels),
    }
    ET.fromstring(payloads["profiles.svg"].decode())
    os.makedirs(out_dir, exist_ok=True)
    written = {}
    for name, data in payloads.items():
        final = os.path.join(out_dir, name)
        tmp = final + ".tmp"
        try:
            with open(tmp, "wb") as fh:
                fh.write(data)
            os.replace(tmp, final)
        except OSError as exc:
            raise RuntimeError(f"failed writing {final}: {exc}") from exc
        written[name] = final
    return written
