"""Subproblem solvers over the reduced feasible polytope.

Four interchangeable strategies sit behind one entry point, `solve`:

  DirectGlobal      deterministic DIRECT-style trisection over the y-box
  MultiStartLocal   Nelder-Mead from y = 0 plus random feasible restarts
  SingleStartLocal  one Nelder-Mead descent from y = 0
  RandomSearch      uniform feasible sampling baseline

Every solve evaluates y = 0 first (it maps to the anchor p, always feasible),
so a trivially successful anchor terminates after a single evaluation. Budgets
count objective evaluations of f only; infeasible penalty queries are free.
Termination is by target value, evaluation budget, or internal convergence,
the last reported as BudgetExhausted since the search stopped of its own
accord with budget to spare.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .embedcore import SeededRng
from .reduced import (
    BUDGET_EXHAUSTED,
    SOLVER_ERROR,
    TARGET_REACHED,
    ReducedProblem,
    SolveResult,
    is_feasible,
    penalized_objective,
)

__all__ = [
    "SolverBudget",
    "SolverSpec",
    "solve",
    "direct_state",
    "direct_iterate",
    "nelder_mead_local",
]

DIRECT_GLOBAL = "DirectGlobal"
MULTI_START_LOCAL = "MultiStartLocal"
SINGLE_START_LOCAL = "SingleStartLocal"
RANDOM_SEARCH = "RandomSearch"

_KINDS = (DIRECT_GLOBAL, MULTI_START_LOCAL, SINGLE_START_LOCAL, RANDOM_SEARCH)


@dataclass(frozen=True)
class SolverBudget:
    max_evals: int
    target_value: float | None = None
    wall_limit: float | None = None

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")


@dataclass(frozen=True)
class SolverSpec:
    kind: str
    starts: int = 5
    tuning: dict = field(default_factory=dict)
    rho_assumed: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}; known: {_KINDS}")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if not (0.0 < self.rho_assumed <= 1.0):
            raise ValueError("rho_assumed must be in (0, 1]")


class _StopSearch(Exception):
    def __init__(self, status: str, soft: bool = False):
        super().__init__(status)
        self.status = status
        self.soft = soft


class _Tracker:
    """Budget, target, and best-point accounting around penalized_objective.

    Evaluations are metered by the problem's own counter, so only feasible
    queries spend budget. soft_cap carves a sub-window out of the budget for
    one multi-start leg without ending the whole solve.
    """

    def __init__(self, rp: ReducedProblem, budget: SolverBudget):
        self.rp = rp
        self.budget = budget
        self.start_count = rp.problem.counter
        self.best_y: np.ndarray | None = None
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self.soft_cap: int | None = None
        self.deadline = (
            time.monotonic() + budget.wall_limit if budget.wall_limit else None
        )

    @property
    def ticks(self) -> int:
        return self.rp.problem.counter - self.start_count

    def query(self, y) -> float:
        y = np.asarray(y, dtype=float)
        feasible = is_feasible(self.rp, y)
        if feasible:
            if self.ticks >= self.budget.max_evals:
                raise _StopSearch(BUDGET_EXHAUSTED)
            if self.soft_cap is not None and self.ticks >= self.soft_cap:
                raise _StopSearch(BUDGET_EXHAUSTED, soft=True)
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise _StopSearch(BUDGET_EXHAUSTED)
        value = penalized_objective(self.rp, y)
        if feasible:
            if value < self.best_f:
                self.best_f = value
                self.best_y = y.copy()
                self.best_x = self.rp.map(y)
            if (
                self.budget.target_value is not None
                and value <= self.budget.target_value
            ):
                raise _StopSearch(TARGET_REACHED)
        return value

    def result(self, status: str) -> SolveResult:
        if self.best_y is None:
            raise RuntimeError("no feasible point was evaluated; y = 0 was skipped")
        return SolveResult(
            y_best=self.best_y,
            x_best=self.best_x,
            f_best=self.best_f,
            evals=self.ticks,
            status=status,
        )


def solve(
    rp: ReducedProblem,
    spec: SolverSpec,
    budget: SolverBudget,
    rng: SeededRng | None = None,
) -> SolveResult:
    """Run one subproblem solve. Always queries y = 0 before anything else."""
    tracker = _Tracker(rp, budget)
    status = BUDGET_EXHAUSTED
    gen = rng.generator() if rng is not None else None
    try:
        f0 = tracker.query(np.zeros(rp.d))
        if spec.kind == DIRECT_GLOBAL:
            _run_direct(tracker, rp, spec, budget)
        elif spec.kind == MULTI_START_LOCAL:
            _run_multistart(tracker, rp, spec, budget, gen, f0)
        elif spec.kind == SINGLE_START_LOCAL:
            _nelder_mead(
                tracker.query,
                np.zeros(rp.d),
                rp.y_box,
                f_start=f0,
                diam_tol=spec.tuning.get("diam_tol", 1e-8),
            )
        elif spec.kind == RANDOM_SEARCH:
            _run_random(tracker, rp, budget, gen)
    except _StopSearch as stop:
        status = stop.status
    except Exception:
        status = SOLVER_ERROR
    return tracker.result(status)


def _uniform_in_box(gen: np.random.Generator, box: np.ndarray) -> np.ndarray:
    return box[:, 0] + gen.random(box.shape[0]) * (box[:, 1] - box[:, 0])


def _feasible_start(rp: ReducedProblem, gen: np.random.Generator) -> np.ndarray:
    for _ in range(100):
        y = _uniform_in_box(gen, rp.y_box)
        if is_feasible(rp, y):
            return y
    # thin polytope inside its box: walk the last draw back toward 0, which
    # is feasible, and keep the furthest feasible point on that ray
    a, b = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (a + b)
        if is_feasible(rp, mid * y):
            a = mid
        else:
            b = mid
    return a * y


def _run_random(tracker, rp, budget, gen):
    if gen is None:
        raise ValueError("RandomSearch needs an rng")
    attempts_cap = 200 * budget.max_evals
    for _ in range(attempts_cap):
        y = _uniform_in_box(gen, rp.y_box)
        if is_feasible(rp, y):
            tracker.query(y)


def _run_multistart(tracker, rp, spec, budget, gen, f0):
    if gen is None:
        raise ValueError("MultiStartLocal needs an rng")
    diam_tol = spec.tuning.get("diam_tol", 1e-8)
    remaining = budget.max_evals - tracker.ticks
    share = max(1, remaining // spec.starts)
    for i in range(spec.starts):
        last = i == spec.starts - 1
        tracker.soft_cap = None if last else min(
            budget.max_evals, tracker.ticks + share
        )
        try:
            if i == 0:
                _nelder_mead(
                    tracker.query, np.zeros(rp.d), rp.y_box,
                    f_start=f0, diam_tol=diam_tol,
                )
            else:
                _nelder_mead(
                    tracker.query, _feasible_start(rp, gen), rp.y_box,
                    diam_tol=diam_tol,
                )
        except _StopSearch as stop:
            if not stop.soft:
                raise
        finally:
            tracker.soft_cap = None


# --- Nelder-Mead -------------------------------------------------------------


def _nelder_mead(objective, start, box, f_start=None, diam_tol=1e-8,
                 max_iters=500000):
    """Reflection/expansion/contraction/shrink on a (d+1)-vertex simplex.

    Runs until the simplex collapses below diam_tol; budget and target
    stopping arrive as exceptions raised by the objective itself. Pass
    f_start when the start point's value is already known, to avoid paying
    for it twice.
    """
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    start = np.asarray(start, dtype=float)
    d = start.size
    box = np.asarray(box, dtype=float)
    span = box[:, 1] - box[:, 0]

    verts = np.tile(start, (d + 1, 1))
    fvals = np.empty(d + 1)
    fvals[0] = objective(start) if f_start is None else float(f_start)
    for i in range(d):
        step = 0.05 * span[i] if span[i] > 0 else 0.05
        if verts[i + 1, i] + step > box[i, 1]:
            step = -step
        verts[i + 1, i] += step
        fvals[i + 1] = objective(verts[i + 1])

    for _ in range(max_iters):
        order = np.argsort(fvals, kind="stable")
        verts = verts[order]
        fvals = fvals[order]
        if np.abs(verts[1:] - verts[0]).max() < diam_tol:
            return verts[0], fvals[0]

        centroid = verts[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - verts[-1])
        fr = objective(xr)
        if fr < fvals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = objective(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + rho * (xr - centroid)
            else:
                xc = centroid + rho * (verts[-1] - centroid)
            fc = objective(xc)
            if fc < min(fr, fvals[-1]):
                verts[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, d + 1):
                    verts[i] = verts[0] + sigma * (verts[i] - verts[0])
                    fvals[i] = objective(verts[i])
    return verts[0], fvals[0]


def nelder_mead_local(objective, start, box, budget: SolverBudget) -> SolveResult:
    """Standalone Nelder-Mead on a bare callable.

    Every call to `objective` counts one evaluation here (there is no
    feasibility structure to exempt); reported best is over all evaluations.
    """
    state = {"n": 0, "best_y": None, "best_f": math.inf}

    def metered(y):
        if state["n"] >= budget.max_evals:
            raise _StopSearch(BUDGET_EXHAUSTED)
        state["n"] += 1
        v = float(objective(y))
        if v < state["best_f"]:
            state["best_f"] = v
            state["best_y"] = np.array(y, dtype=float)
        if budget.target_value is not None and v <= budget.target_value:
            raise _StopSearch(TARGET_REACHED)
        return v

    status = BUDGET_EXHAUSTED
    try:
        _nelder_mead(metered, start, box)
    except _StopSearch as stop:
        status = stop.status
    if state["best_y"] is None:
        raise RuntimeError("budget did not allow a single evaluation")
    return SolveResult(
        y_best=state["best_y"],
        x_best=state["best_y"].copy(),
        f_best=state["best_f"],
        evals=state["n"],
        status=status,
    )


# --- DIRECT ------------------------------------------------------------------


_SIZE_SCALE = 1e15  # quantization for grouping rectangles of equal size


class DirectState:
    """Partition state of the trisection search over a box.

    Rectangles live in unit coordinates; levels[j, i] counts how many times
    rectangle j was trisected along dimension i, so its side there is
    3^(-levels[j,i]). The size key quantizes the squared diagonal so equal
    shapes group together regardless of summation order. Fully deterministic:
    ties break on insertion index.
    """

    def __init__(self, objective, box, eps_direct=1e-4):
        self.box = np.asarray(box, dtype=float)
        self._lo = self.box[:, 0]
        self._span = self.box[:, 1] - self.box[:, 0]
        self.objective = objective
        self.eps_direct = float(eps_direct)
        self.d = self.box.shape[0]
        cap = 256
        self._centers = np.empty((cap, self.d))
        self._fvals = np.empty(cap)
        self._levels = np.zeros((cap, self.d), dtype=np.int64)
        self._sizekey = np.empty(cap, dtype=np.int64)
        self.n = 0
        self.initialized = False

    def _grow(self, need: int) -> None:
        cap = self._fvals.shape[0]
        if need <= cap:
            return
        new_cap = max(need, 2 * cap)
        for name in ("_centers", "_fvals", "_levels", "_sizekey"):
            old = getattr(self, name)
            shape = (new_cap,) + old.shape[1:]
            fresh = np.zeros(shape, dtype=old.dtype)
            fresh[: self.n] = old[: self.n]
            setattr(self, name, fresh)

    def _key_of(self, levels: np.ndarray) -> int:
        return int(round(float((9.0 ** (-levels.astype(float))).sum()) * _SIZE_SCALE))

    def _append(self, center: np.ndarray, f: float, levels: np.ndarray) -> int:
        self._grow(self.n + 1)
        j = self.n
        self._centers[j] = center
        self._fvals[j] = f
        self._levels[j] = levels
        self._sizekey[j] = self._key_of(levels)
        self.n = j + 1
        return j

    def _eval(self, center_unit: np.ndarray) -> float:
        return float(self.objective(self._lo + center_unit * self._span))

    def measure(self, j: int) -> float:
        return 0.5 * math.sqrt(self._sizekey[j] / _SIZE_SCALE)

    @property
    def fvals(self) -> np.ndarray:
        return self._fvals[: self.n]

    @property
    def best_f(self) -> float:
        return float(self.fvals.min())


def direct_state(objective, box, eps_direct=1e-4) -> DirectState:
    return DirectState(objective, box, eps_direct)


def _potentially_optimal(state: DirectState) -> list[int]:
    # one best rectangle per distinct size, then the lower-right convex hull
    # from the incumbent outward, then the balance test that discards
    # near-duplicates of pure exploitation
    n = state.n
    keys = state._sizekey[:n]
    f = state._fvals[:n]
    order = np.lexsort((np.arange(n), f, keys))
    ordered_keys = keys[order]
    starts = np.flatnonzero(np.concatenate(([True], np.diff(ordered_keys) != 0)))
    group_best = order[starts]  # best-f rectangle per size, ascending size

    cands = [(0.5 * math.sqrt(keys[j] / _SIZE_SCALE), float(f[j]), int(j))
             for j in group_best]
    f_min = state.best_f
    start = min(range(len(cands)), key=lambda i: (cands[i][1], cands[i][0]))
    hull = [cands[start]]
    i = start
    while i < len(cands) - 1:
        m_i, f_i, _ = cands[i]
        best_slope, best_k = None, None
        for k in range(i + 1, len(cands)):
            m_k, f_k, _ = cands[k]
            if m_k <= m_i:
                continue
            slope = (f_k - f_i) / (m_k - m_i)
            if best_slope is None or slope < best_slope - 1e-15:
                best_slope, best_k = slope, k
        if best_k is None:
            break
        hull.append(cands[best_k])
        i = best_k

    selected = []
    for h, (m_j, f_j, j) in enumerate(hull):
        if h + 1 < len(hull):
            m_n, f_n, _ = hull[h + 1]
            slope = (f_n - f_j) / (m_n - m_j)
            if f_j - slope * m_j > f_min - state.eps_direct * abs(f_min):
                continue
        selected.append(j)
    return selected


def _divide(state: DirectState, j: int) -> None:
    levels = state._levels[j]
    center = state._centers[j].copy()
    t_min = int(levels.min())
    dims = np.flatnonzero(levels == t_min)
    offset = 3.0 ** (-(t_min + 1))
    if offset == 0.0:
        return  # trisection has hit floating-point resolution

    trials = []
    for i in dims:
        plus = center.copy()
        plus[i] += offset
        minus = center.copy()
        minus[i] -= offset
        f_plus = state._eval(plus)
        f_minus = state._eval(minus)
        trials.append((min(f_plus, f_minus), int(i), plus, f_plus, minus, f_minus))

    # dims with better sampled values keep the larger child pieces
    trials.sort(key=lambda t: (t[0], t[1]))
    for _, i, plus, f_plus, minus, f_minus in trials:
        child_levels = state._levels[j].copy()
        child_levels[i] += 1
        state._append(plus, f_plus, child_levels)
        state._append(minus, f_minus, child_levels)
        state._levels[j, i] += 1  # parent keeps the middle third
    state._sizekey[j] = state._key_of(state._levels[j])


def direct_iterate(state: DirectState) -> DirectState:
    """One step: the first call evaluates the box center; later calls select
    potentially optimal rectangles and trisect them along their longest sides."""
    if not state.initialized:
        center = np.full(state.d, 0.5)
        f0 = state._eval(center)
        state._append(center, f0, np.zeros(state.d, dtype=np.int64))
        state.initialized = True
        return state
    for j in _potentially_optimal(state):
        _divide(state, j)
    return state


def _run_direct(tracker, rp, spec, budget):
    state = direct_state(
        tracker.query, rp.y_box, spec.tuning.get("eps_direct", 1e-4)
    )
    # the mandatory y = 0 query already happened; DIRECT starts from the box
    # center, which generally differs from y = 0
    max_rounds = 10 * budget.max_evals
    for _ in range(max_rounds):
        direct_iterate(state)
        if state._sizekey[: state.n].max() == 0:
            return  # partition ground to dust; treat as internal convergence
