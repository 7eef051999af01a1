"""Outer loop: repeated random embeddings around a moving anchor.

Each iteration k draws a fresh Gaussian matrix A^k, forms the affine
subproblem min f(A^k y + p^{k-1}) over the feasible slice of the box, hands
it to a subproblem solver, and then moves the anchor according to the chosen
policy. Four policies are provided:

  Adaptive       adopt x^k whenever it improves on the anchor value
  LocalAdaptive  adopt x^k when the value moved by more than gamma,
                 otherwise resample the anchor uniformly in the box
  Origin         keep the anchor pinned at 0
  UniformRandom  resample the anchor uniformly every iteration

Reproducibility contract: iteration k consumes exactly three child streams
of the master seed, 3k for the embedding draw, 3k+1 for the solver, 3k+2
for the policy, and stream 0 is reserved for the initial anchor draw. Runs
with different K therefore share their first min(K, K') embeddings, and any
iteration can be replayed in isolation from (master_seed, k).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .embedcore import Embedding, SeededRng, sample_gaussian
from .problems import SyntheticProblem
from .reduced import make_reduced
from .solvers import SOLVER_ERROR, SolverBudget, SolverSpec, solve

__all__ = [
    "ADAPTIVE",
    "LOCAL_ADAPTIVE",
    "ORIGIN",
    "UNIFORM_RANDOM",
    "POLICY_KINDS",
    "PPolicy",
    "RunConfig",
    "EmbeddingStep",
    "RunRecord",
    "SolverFailure",
    "update_p",
    "run",
    "x_opt",
    "run_record_rows",
    "CSV_COLUMNS",
]

ADAPTIVE = "Adaptive"
LOCAL_ADAPTIVE = "LocalAdaptive"
ORIGIN = "Origin"
UNIFORM_RANDOM = "UniformRandom"
POLICY_KINDS = (ADAPTIVE, LOCAL_ADAPTIVE, ORIGIN, UNIFORM_RANDOM)

CSV_COLUMNS = (
    "problem",
    "D",
    "d",
    "variant",
    "solver",
    "rep",
    "k",
    "f_xk",
    "f_xopt",
    "cum_evals",
    "terminated",
)


@dataclass(frozen=True)
class PPolicy:
    """Anchor update rule. gamma is only consulted by LocalAdaptive."""

    kind: str
    gamma: float = 1e-5

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class RunConfig:
    d: int
    policy: PPolicy
    solver: SolverSpec
    per_embedding_budget: SolverBudget
    master_seed: int
    K: int = 100
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class EmbeddingStep:
    """One iteration of the outer loop, in replay-friendly form.

    p_digest is a 16-hex-character blake2b digest of the anchor the
    iteration ran with; success means this iteration's own solution entered
    the epsilon-neighborhood of the global minimum.
    """

    k: int
    f_xk: float
    f_xopt: float
    cum_evals: int
    p_digest: str
    success: bool
    status: str


@dataclass
class RunRecord:
    problem: str
    D: int
    d: int
    variant: str
    solver: str
    master_seed: int
    f_star: float
    epsilon: float
    steps: list[EmbeddingStep] = field(default_factory=list)
    xs: list[np.ndarray] = field(default_factory=list)
    termination: tuple[str, int] = ("ExhaustedK", 0)


class SolverFailure(RuntimeError):
    """A subproblem solver errored mid-run. Carries the partial record so
    callers can keep what completed."""

    def __init__(self, message: str, record: RunRecord):
        super().__init__(message)
        self.record = record


def _anchor_digest(p: np.ndarray) -> str:
    raw = np.ascontiguousarray(p, dtype=float).tobytes()
    return hashlib.blake2b(raw, digest_size=8).hexdigest()


def update_p(
    policy: PPolicy,
    p_prev: np.ndarray,
    x_k: np.ndarray,
    f_vals: tuple[float, float],
    rng: SeededRng | None,
) -> np.ndarray:
    """Next anchor under the given policy.

    f_vals is (f(p_prev), f(x_k)). Adopted points are clipped onto the box,
    since solver output is only feasible up to a hair of tolerance. rng is
    consulted only by the policies that draw.
    """
    p_prev = np.asarray(p_prev, dtype=float)
    f_p, f_x = f_vals
    if policy.kind == ORIGIN:
        return np.zeros_like(p_prev)
    if policy.kind == ADAPTIVE:
        if f_x < f_p:
            return np.clip(np.asarray(x_k, dtype=float), -1.0, 1.0)
        return p_prev.copy()
    if policy.kind == LOCAL_ADAPTIVE:
        if abs(f_x - f_p) > policy.gamma:
            return np.clip(np.asarray(x_k, dtype=float), -1.0, 1.0)
        if rng is None:
            raise ValueError("LocalAdaptive resampling needs an rng")
        return rng.generator().uniform(-1.0, 1.0, p_prev.shape[0])
    if rng is None:
        raise ValueError("UniformRandom needs an rng")
    return rng.generator().uniform(-1.0, 1.0, p_prev.shape[0])


def _initial_anchor(cfg: RunConfig, D: int) -> np.ndarray:
    if cfg.policy.kind == UNIFORM_RANDOM:
        gen = SeededRng(cfg.master_seed, 0).generator()
        return gen.uniform(-1.0, 1.0, D)
    return np.zeros(D)


def run(problem: SyntheticProblem, cfg: RunConfig) -> RunRecord:
    """Drive up to K random embeddings on the problem; stop as soon as the
    best point found is within epsilon of the global minimum.

    A budget without a target value is given one, f* + epsilon, so solvers
    can stop the moment the neighborhood is reached. If a solver errors, a
    SolverFailure carrying the partial record is raised.
    """
    D = problem.D
    record = RunRecord(
        problem=problem.name,
        D=D,
        d=cfg.d,
        variant=cfg.policy.kind,
        solver=cfg.solver.kind,
        master_seed=cfg.master_seed,
        f_star=problem.f_star,
        epsilon=cfg.epsilon,
        termination=("ExhaustedK", cfg.K),
    )
    budget = cfg.per_embedding_budget
    if budget.target_value is None:
        budget = replace(budget, target_value=problem.f_star + cfg.epsilon)
    p = _initial_anchor(cfg, D)
    start_evals = problem.counter
    f_opt = np.inf
    for k in range(1, cfg.K + 1):
        A = sample_gaussian(D, cfg.d, SeededRng(cfg.master_seed, 3 * k))
        rp = make_reduced(Embedding(A, p), problem)
        result = solve(rp, cfg.solver, budget, rng=SeededRng(cfg.master_seed, 3 * k + 1))
        x_k = result.x_best
        f_xk = result.f_best
        f_opt = min(f_opt, f_xk)
        record.steps.append(
            EmbeddingStep(
                k=k,
                f_xk=f_xk,
                f_xopt=f_opt,
                cum_evals=problem.counter - start_evals,
                p_digest=_anchor_digest(p),
                success=f_xk - problem.f_star <= cfg.epsilon,
                status=result.status,
            )
        )
        record.xs.append(np.asarray(x_k, dtype=float))
        if result.status == SOLVER_ERROR:
            record.termination = ("SolverError", k)
            raise SolverFailure(
                f"solver errored at embedding {k} on {problem.name}", record
            )
        if f_opt - problem.f_star <= cfg.epsilon:
            record.termination = ("EpsReached", k)
            break
        p = update_p(
            cfg.policy,
            p,
            x_k,
            (rp.anchor_value, f_xk),
            SeededRng(cfg.master_seed, 3 * k + 2),
        )
    return record


def x_opt(record: RunRecord, k: int) -> np.ndarray:
    """Best point over the first k embeddings; its value is steps[j].f_xopt."""
    if not 1 <= k <= len(record.steps):
        raise ValueError(f"k must be in [1, {len(record.steps)}]")
    fs = np.array([s.f_xk for s in record.steps[:k]])
    return record.xs[int(np.argmin(fs))]


def run_record_rows(record: RunRecord, rep: int) -> list[dict]:
    """Flatten a record into CSV_COLUMNS dicts. The terminated column is
    empty except on the final row, where it carries the termination tag."""
    rows = []
    last = len(record.steps) - 1
    for i, s in enumerate(record.steps):
        rows.append(
            {
                "problem": record.problem,
                "D": record.D,
                "d": record.d,
                "variant": record.variant,
                "solver": record.solver,
                "rep": rep,
                "k": s.k,
                "f_xk": s.f_xk,
                "f_xopt": s.f_xopt,
                "cum_evals": s.cum_evals,
                "terminated": record.termination[0] if i == last else "",
            }
        )
    return rows
