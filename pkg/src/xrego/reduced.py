"""The reduced subproblem: minimize f(Ay + p) subject to Ay + p staying in the box.

The feasible set in y-space is the polytope {y : -1 <= (Ay + p)_i <= 1}. Box
solvers need an axis-aligned enclosure of it, computed exactly by 2d small
linear programs. Constraint handling is extreme-barrier style: infeasible
queries get a surrogate value above anything f attains on the box, and f is
never evaluated there (so the evaluation counter only ever counts feasible
points).

The origin of y-space always maps to the anchor p, which lies in the box by
construction; y = 0 is therefore always feasible and every solver evaluates
it first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .embedcore import Embedding
from .problems import SyntheticProblem, evaluate

__all__ = [
    "ReducedProblem",
    "SolveResult",
    "make_reduced",
    "is_feasible",
    "compute_y_box",
    "penalized_objective",
]

_FEAS_TOL = 1e-12

TARGET_REACHED = "TargetReached"
BUDGET_EXHAUSTED = "BudgetExhausted"
SOLVER_ERROR = "SolverError"


@dataclass
class ReducedProblem:
    embedding: Embedding
    problem: SyntheticProblem
    y_box: np.ndarray  # shape (d, 2): [low, high] per coordinate
    penalty_scale: float
    anchor_value: float  # f(p), computed without touching the counter

    @property
    def d(self) -> int:
        return self.embedding.dim

    def map(self, y: np.ndarray) -> np.ndarray:
        return self.embedding.map(y)


@dataclass
class SolveResult:
    """Outcome of one subproblem solve. x_best is always feasible."""

    y_best: np.ndarray
    x_best: np.ndarray
    f_best: float
    evals: int
    status: str


def is_feasible(rp: ReducedProblem, y) -> bool:
    x = rp.embedding.map(np.asarray(y, dtype=float))
    return bool(np.abs(x).max() <= 1.0 + _FEAS_TOL)


def compute_y_box(emb: Embedding) -> np.ndarray:
    """Exact per-coordinate bounds of the feasible polytope, slightly inflated.

    Each bound is one linear program in d variables with 2D inequality rows.
    Infeasibility is impossible (y = 0 qualifies); an unbounded LP means A has
    a zero row pattern that Gaussian draws never produce, and is reported.
    """
    A = emb.A
    D, d = A.shape
    ub = np.concatenate([1.0 - emb.p, 1.0 + emb.p])
    stacked = np.vstack([A, -A])
    box = np.empty((d, 2))
    for j in range(d):
        c = np.zeros(d)
        for sign, col in ((1.0, 0), (-1.0, 1)):
            c[j] = sign
            res = linprog(c, A_ub=stacked, b_ub=ub, bounds=(None, None), method="highs")
            if res.status == 3:
                raise RuntimeError(f"y-box LP unbounded in coordinate {j}")
            if not res.success:
                raise RuntimeError(
                    f"y-box LP failed in coordinate {j}: {res.message}"
                )
            box[j, col] = sign * res.fun
        c[j] = 0.0
    # inflate so boundary points survive round-off
    margin = 1e-9 * (1.0 + np.abs(box))
    box[:, 0] -= margin[:, 0]
    box[:, 1] += margin[:, 1]
    return box


def make_reduced(emb: Embedding, problem: SyntheticProblem) -> ReducedProblem:
    """Assemble the reduced problem; calibrates the penalty level from f(p).

    The calibration evaluation bypasses the counter: it is bookkeeping, not a
    solver query. The solver's mandatory first query at y = 0 is the one that
    counts.
    """
    if emb.ambient_dim != problem.D:
        raise ValueError("embedding and problem dimensions differ")
    f_p = problem.peek(emb.p)
    return ReducedProblem(
        embedding=emb,
        problem=problem,
        y_box=compute_y_box(emb),
        penalty_scale=f_p + 10.0 * (1.0 + abs(f_p)),
        anchor_value=f_p,
    )


def penalized_objective(rp: ReducedProblem, y) -> float:
    """f(Ay + p) when feasible; a penalty above sup f on the box otherwise.

    The penalty grows with the total constraint violation so that descent
    methods are pushed back toward the polytope. Infeasible queries never
    evaluate f and never tick the counter.
    """
    y = np.asarray(y, dtype=float)
    x = rp.embedding.map(y)
    violation = np.maximum(np.abs(x) - 1.0, 0.0)
    if violation.max() <= _FEAS_TOL:
        return evaluate(rp.problem, x)
    return rp.penalty_scale * (1.0 + float(violation.sum()))
