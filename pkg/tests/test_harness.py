"""Experiment harness: plans, cells, medians, profiles, and emission.

The Dolan-More profile test uses a three-problem, two-algorithm table small
enough to work out every ratio and curve value by hand.
"""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from xrego.driver import ADAPTIVE, LOCAL_ADAPTIVE, ORIGIN, UNIFORM_RANDOM, PPolicy
from xrego.harness import (
    EMBEDDED,
    NO_EMBEDDING,
    NO_EMBEDDING_VARIANT,
    CellResult,
    CellSpec,
    ExperimentPlan,
    ResultTable,
    cells_from_rows,
    default_budgets,
    emit,
    execute_cell,
    format_row,
    median_table,
    performance_profile,
    plan_cells,
    plan_from_dict,
    plan_to_dict,
    profile_panels,
    run_plan,
    verify_rows,
)
from xrego.problems import manifest_seed
from xrego.solvers import (
    DIRECT_GLOBAL,
    MULTI_START_LOCAL,
    SINGLE_START_LOCAL,
    SolverBudget,
    SolverSpec,
)


def _small_plan():
    budgets = default_budgets()
    budgets[(DIRECT_GLOBAL, EMBEDDED)] = SolverBudget(150)
    return ExperimentPlan(
        problems=("beale", "zettl"),
        dims=(6,),
        variants=(PPolicy(ORIGIN), PPolicy(ADAPTIVE)),
        solvers=(SolverSpec(DIRECT_GLOBAL),),
        reps=2,
        budgets=budgets,
        include_no_embedding=False,
        K=4,
        epsilon=1e-2,
    )


@pytest.fixture(scope="module")
def small_table():
    return run_plan(_small_plan(), master_seed=2024)


class TestBudgetsAndPlan:
    def test_default_budget_table(self):
        b = default_budgets()
        assert b[(DIRECT_GLOBAL, EMBEDDED)].max_evals == 3000
        assert b[(DIRECT_GLOBAL, NO_EMBEDDING)].max_evals == 60000
        assert b[(SINGLE_START_LOCAL, EMBEDDED)].max_evals == 400
        assert b[(MULTI_START_LOCAL, NO_EMBEDDING)].max_evals == 60000

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            ExperimentPlan(reps=0)
        with pytest.raises(ValueError):
            ExperimentPlan(d_offsets=(0, -1))
        with pytest.raises(ValueError):
            ExperimentPlan(budgets={(DIRECT_GLOBAL, EMBEDDED): SolverBudget(10)})

    def test_dict_round_trip(self):
        plan = _small_plan()
        assert plan_from_dict(plan_to_dict(plan)) == plan

    def test_empty_config_gives_defaults(self):
        assert plan_from_dict({}) == ExperimentPlan()

    def test_variant_shorthand(self):
        plan = plan_from_dict({"variants": ["Origin", {"kind": "LocalAdaptive",
                                                       "gamma": 0.25}]})
        assert plan.variants[0] == PPolicy(ORIGIN)
        assert plan.variants[1].gamma == 0.25

    def test_budget_override_merges(self):
        plan = plan_from_dict({"budgets": {"DirectGlobal": {"embedded": 42}}})
        assert plan.budgets[(DIRECT_GLOBAL, EMBEDDED)].max_evals == 42
        assert plan.budgets[(DIRECT_GLOBAL, NO_EMBEDDING)].max_evals == 60000


class TestPlanCells:
    def test_pairing_and_counts(self):
        plan = ExperimentPlan(
            problems=("beale",),
            dims=(8,),
            reps=2,
            d_offsets=(0, 1),
        )
        cells = plan_cells(plan, master_seed=7)
        embedded = [c for c in cells if c.mode == EMBEDDED]
        bare = [c for c in cells if c.mode == NO_EMBEDDING]
        # DirectGlobal drives Adaptive+Origin, SingleStartLocal drives the
        # local pair; each combination runs 2 offsets x 2 reps
        assert len(embedded) == 4 * 2 * 2
        assert len(bare) == 2 * 2
        pairs = {(c.solver_kind, c.variant) for c in embedded}
        assert pairs == {
            (DIRECT_GLOBAL, ADAPTIVE),
            (DIRECT_GLOBAL, ORIGIN),
            (SINGLE_START_LOCAL, LOCAL_ADAPTIVE),
            (SINGLE_START_LOCAL, UNIFORM_RANDOM),
        }
        for c in embedded:
            assert c.d in (2, 3)  # d_e + offset
            assert c.K == plan.K
        for c in bare:
            assert c.variant == NO_EMBEDDING_VARIANT
            assert c.d == c.D == 8
            assert c.K == 1
            assert c.max_evals == 60000

    def test_deterministic_and_sorted(self):
        plan = _small_plan()
        a = plan_cells(plan, master_seed=3)
        b = plan_cells(plan, master_seed=3)
        assert a == b
        assert [c.key for c in a] == sorted(c.key for c in a)

    def test_seeds_are_coordinates_not_order(self):
        plan = _small_plan()
        cells = plan_cells(plan, master_seed=3)
        seeds = {c.cell_seed for c in cells}
        assert len(seeds) == len(cells)
        for c in cells:
            assert c.problem_seed == manifest_seed(c.problem, c.D, 3)

    def test_master_seed_moves_cell_seeds(self):
        plan = _small_plan()
        a = plan_cells(plan, master_seed=3)
        b = plan_cells(plan, master_seed=4)
        assert all(x.cell_seed != y.cell_seed for x, y in zip(a, b))


class TestExecuteCell:
    def test_no_embedding_cell_rows(self):
        spec = CellSpec(
            problem="beale", D=6, d=6, variant=NO_EMBEDDING_VARIANT, gamma=1e-5,
            solver_kind=MULTI_START_LOCAL, starts=5, rep=0,
            problem_seed=manifest_seed("beale", 6, 1), cell_seed=99,
            max_evals=2000, K=1, epsilon=1e-2, mode=NO_EMBEDDING,
        )
        rows, cell = execute_cell(spec)
        assert cell.error is None
        assert len(rows) == 1
        row = rows[0]
        assert row["k"] == 1
        assert row["variant"] == NO_EMBEDDING_VARIANT
        assert row["d"] == 6
        assert row["terminated"] in ("TargetReached", "BudgetExhausted")
        assert cell.n_evals == row["cum_evals"] >= 1
        assert cell.solved == (row["terminated"] == "TargetReached")

    def test_impossible_cell_is_isolated(self):
        # hartmann6 cannot be lifted into D = 5 < d_e + 1; the cell must
        # report the error instead of raising
        spec = CellSpec(
            problem="hartmann6", D=5, d=6, variant=ORIGIN, gamma=1e-5,
            solver_kind=DIRECT_GLOBAL, starts=5, rep=0,
            problem_seed=manifest_seed("hartmann6", 5, 1), cell_seed=3,
            max_evals=50, K=2, epsilon=1e-2, mode=EMBEDDED,
        )
        rows, cell = execute_cell(spec)
        assert rows == []
        assert cell.error is not None
        assert not cell.solved


class TestRunPlan:
    def test_replays_identically(self, small_table):
        again = run_plan(_small_plan(), master_seed=2024)
        assert again.rows == small_table.rows
        assert again.cells == small_table.cells

    def test_worker_count_invisible(self, small_table):
        parallel = run_plan(_small_plan(), master_seed=2024, workers=2)
        assert parallel.rows == small_table.rows
        assert parallel.cells == small_table.cells

    def test_no_failures_and_verified(self, small_table):
        assert small_table.failures == []
        assert verify_rows(small_table.rows) == []

    def test_failure_containment(self):
        plan = ExperimentPlan(
            problems=("hartmann6",),
            dims=(5,),
            variants=(PPolicy(ORIGIN),),
            solvers=(SolverSpec(DIRECT_GLOBAL),),
            reps=1,
            include_no_embedding=False,
            K=1,
        )
        table = run_plan(plan, master_seed=1)
        assert len(table.cells) == 1
        assert len(table.failures) == 1
        assert table.rows == []

    def test_cells_reconstruct_from_rows(self, small_table):
        def keyed(cells):
            return sorted(
                (c.problem, c.D, c.d, c.variant, c.solver, c.rep, c.n_evals,
                 c.solved)
                for c in cells
            )

        assert keyed(cells_from_rows(small_table.rows)) == keyed(small_table.cells)


def _cell(problem, rep, variant, solver, n_evals, solved, D=10, d=2):
    return CellResult(
        problem=problem, D=D, d=d, variant=variant, solver=solver, rep=rep,
        n_evals=n_evals, solved=solved,
    )


class TestMedianTable:
    def test_recompute_by_hand(self):
        rows = []
        data = {
            ("beale", 0): (100, "EpsReached"),
            ("beale", 1): (200, "ExhaustedK"),
            ("zettl", 0): (50, "EpsReached"),
            ("zettl", 1): (400, "EpsReached"),
        }
        for (problem, rep), (evals, tag) in data.items():
            rows.append(
                {
                    "problem": problem, "D": 10, "d": 2, "variant": "Origin",
                    "solver": "DirectGlobal", "rep": rep, "k": 1, "f_xk": 0.0,
                    "f_xopt": 0.0, "cum_evals": evals, "terminated": tag,
                }
            )
        table = median_table(rows)
        by_problem = {r["problem"]: r for r in table}
        assert by_problem["beale"]["median_evals"] == 150
        assert by_problem["beale"]["solved"] == 1
        assert by_problem["zettl"]["median_evals"] == 225
        assert by_problem["zettl"]["solved"] == 2
        pooled = by_problem["__all__"]
        assert pooled["median_evals"] == 150
        assert pooled["solved"] == 3
        assert pooled["reps"] == 4

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            median_table([])


class TestPerformanceProfile:
    def _table(self):
        A, B = ("Origin", "DirectGlobal"), ("Adaptive", "DirectGlobal")
        return [
            _cell("p1", 0, *A, 100, True),
            _cell("p2", 0, *A, 400, True),
            _cell("p3", 0, *A, 500, False),
            _cell("p1", 0, *B, 200, True),
            _cell("p2", 0, *B, 999, False),
            _cell("p3", 0, *B, 999, False),
        ]

    def test_hand_worked_curves(self):
        curves = performance_profile(
            self._table(), ["Origin/DirectGlobal", "Adaptive/DirectGlobal"]
        )
        a = next(c for c in curves if c.algorithm == "Origin/DirectGlobal")
        b = next(c for c in curves if c.algorithm == "Adaptive/DirectGlobal")
        # reference costs: p1 -> 100, p2 -> 400, p3 -> unsolved by both
        assert a.pi_at(1.0) == pytest.approx(2 / 3)
        assert a.pi_at(100.0) == pytest.approx(2 / 3)  # p3 keeps it below 1
        assert b.pi_at(1.0) == 0.0
        assert b.pi_at(2.0) == pytest.approx(1 / 3)
        assert b.pi_at(1e6) == pytest.approx(1 / 3)

    def test_single_algorithm_baseline(self):
        curves = performance_profile(self._table(), ["Origin/DirectGlobal"])
        assert curves[0].pi_at(1.0) == pytest.approx(2 / 3)

    def test_curves_monotone(self):
        for curve in performance_profile(
            self._table(), ["Origin/DirectGlobal", "Adaptive/DirectGlobal"]
        ):
            vals = [v for _, v in curve.points]
            assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_error_cases(self):
        with pytest.raises(ValueError):
            performance_profile([], ["x/y"])
        with pytest.raises(ValueError):
            performance_profile(self._table(), ["Missing/Algorithm"])
        dead = [_cell("p1", 0, "Origin", "DirectGlobal", 5, False)]
        with pytest.raises(ValueError):
            performance_profile(dead, ["Origin/DirectGlobal"])

    def test_panels_keyed_and_pruned(self):
        cells = self._table() + [
            _cell("p1", 0, "none", "MultiStartLocal", 30, False, D=10),
        ]
        panels = profile_panels(cells)
        assert ("DirectGlobal", 10) in panels
        # the MultiStartLocal panel solved nothing, so it is dropped
        assert ("MultiStartLocal", 10) not in panels


def _clean_rows():
    rows = []
    for k, (f, cum) in enumerate([(3.0, 10), (2.0, 25), (2.5, 30)], start=1):
        rows.append(
            {
                "problem": "beale", "D": 6, "d": 2, "variant": "Origin",
                "solver": "DirectGlobal", "rep": 0, "k": k, "f_xk": f,
                "f_xopt": min(3.0, 2.0) if k > 1 else 3.0, "cum_evals": cum,
                "terminated": "ExhaustedK" if k == 3 else "",
            }
        )
    return rows


class TestVerifyRows:
    def test_clean_table(self):
        assert verify_rows(_clean_rows()) == []

    def test_detects_gap_in_k(self):
        rows = _clean_rows()
        del rows[1]
        assert any("non-consecutive" in v for v in verify_rows(rows))

    def test_detects_eval_stall(self):
        rows = _clean_rows()
        rows[1]["cum_evals"] = rows[0]["cum_evals"]
        assert any("strictly increasing" in v for v in verify_rows(rows))

    def test_detects_rising_best(self):
        rows = _clean_rows()
        rows[2]["f_xopt"] = 99.0
        assert any("f_xopt" in v for v in verify_rows(rows))

    def test_detects_wrong_running_min(self):
        rows = _clean_rows()
        rows[2]["f_xopt"] = 1.0  # still non-increasing, but not the true min
        assert any("running minimum" in v for v in verify_rows(rows))

    def test_detects_misplaced_terminated(self):
        rows = _clean_rows()
        rows[0]["terminated"] = "EpsReached"
        assert any("terminated" in v for v in verify_rows(rows))
        rows = _clean_rows()
        rows[2]["terminated"] = ""
        assert any("terminated" in v for v in verify_rows(rows))


class TestEmission:
    def test_format_row_canonical(self):
        row = {
            "problem": "beale", "D": 6, "d": 2, "variant": "Origin",
            "solver": "DirectGlobal", "rep": 0, "k": 1, "f_xk": 0.1,
            "f_xopt": 1e-3, "cum_evals": 12, "terminated": "EpsReached",
        }
        out = format_row(row)
        assert out["f_xk"] == "0.1"
        assert out["f_xopt"] == "0.001"
        assert out["D"] == "6"
        assert out["terminated"] == "EpsReached"

    def test_emit_files(self, small_table, tmp_path):
        panels = profile_panels(small_table.cells)
        assert panels  # the small plan solves at least one cell
        written = emit(small_table, panels, str(tmp_path / "out"))
        assert sorted(written) == [
            "medians.csv", "profiles.csv", "profiles.svg", "results.csv"
        ]
        for path in written.values():
            assert (tmp_path / "out").joinpath(path.split("/")[-1]).exists()
        svg = (tmp_path / "out" / "profiles.svg").read_bytes()
        ET.fromstring(svg.decode())

    def test_emit_deterministic(self, small_table, tmp_path):
        panels = profile_panels(small_table.cells)
        emit(small_table, panels, str(tmp_path / "a"))
        emit(small_table, panels, str(tmp_path / "b"))
        for name in ("results.csv", "medians.csv", "profiles.csv", "profiles.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_emit_requires_curves(self, small_table, tmp_path):
        target = tmp_path / "nothing"
        with pytest.raises(ValueError):
            emit(small_table, {}, str(target))
        assert not target.exists()

    def test_results_csv_round_trips_rows(self, small_table, tmp_path):
        import csv

        panels = profile_panels(small_table.cells)
        emit(small_table, panels, str(tmp_path / "rt"))
        with open(tmp_path / "rt" / "results.csv", newline="") as fh:
            loaded = list(csv.DictReader(fh))
        assert len(loaded) == len(small_table.rows)
        formatted = sorted(
            (format_row(r)["problem"], format_row(r)["k"], format_row(r)["f_xk"])
            for r in small_table.rows
        )
        from_disk = sorted((r["problem"], r["k"], r["f_xk"]) for r in loaded)
        assert formatted == from_disk
