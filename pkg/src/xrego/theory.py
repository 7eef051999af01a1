"""Monte-Carlo and quadrature validation of the probabilistic machinery.

Everything the optimizer relies on is checked here against an independent
route. The sampling side draws fresh Gaussian embeddings, computes the
minimal-norm reduced minimizer through the QR path, and compares hit
frequencies, norm ratios, and constant-subspace vectors against the claimed
laws (scaled inverse chi-squared, F, spherical) and against the coverage
integrals evaluated by quadrature. The bound side checks the success lower
bounds tau/tau_0 and the convergence curve 1 - (1 - tau rho)^k on seeded runs.

Standard errors are binomial, sqrt(est (1-est) / N). Where a bound check can
legitimately observe zero hits (deep-tail success probabilities), the standard
error alone collapses to zero and would turn a true statement into a spurious
failure; those comparisons use the Laplace-smoothed rate (hits+1)/(N+2) for
the error term only, never for the estimate itself.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp
from scipy import stats

from .embedcore import SeededRng, minimal_norm_y, sample_gaussian
from .numerics import QuadratureConfig, integral_J
from .problems import SyntheticProblem, lift, quadratic_base
from .reduced import make_reduced
from .driver import PPolicy, RunConfig, RunRecord, ORIGIN, run
from .solvers import DIRECT_GLOBAL, SINGLE_START_LOCAL, SolverBudget, SolverSpec

__all__ = [
    "SuccessTrial",
    "KsCheck",
    "SphericalCheck",
    "CheckResult",
    "TheoryReport",
    "mc_success_probability",
    "success_chain",
    "ks_check_chi2",
    "ks_check_f",
    "sample_w",
    "spherical_check",
    "tau_bounds",
    "tau_epsilon",
    "convergence_bound",
    "k_xi",
    "replay_success_flags",
    "estimate_rho",
    "empirical_curve",
    "validation_suite",
]

_BOX_TOL = 1e-12


@dataclass(frozen=True)
class SuccessTrial:
    problem: str
    p: np.ndarray
    d: int
    N: int
    hits: int
    estimate: float
    std_err: float

    @property
    def smoothed_err(self) -> float:
        q = (self.hits + 1) / (self.N + 2)
        return math.sqrt(q * (1 - q) / self.N)


@dataclass(frozen=True)
class KsCheck:
    statistic: float
    p_value: float
    df: tuple
    passed: bool


@dataclass(frozen=True)
class SphericalCheck:
    proj_p_value: float
    cov_deviation: float
    cov_tolerance: float
    passed: bool


def _trial(prob, p, d, N, hits) -> SuccessTrial:
    est = hits / N
    return SuccessTrial(
        problem=prob.name,
        p=np.asarray(p, dtype=float).copy(),
        d=d,
        N=N,
        hits=hits,
        estimate=est,
        std_err=math.sqrt(est * (1 - est) / N),
    )


def _reduction_geometry(prob: SyntheticProblem, p):
    p = np.asarray(p, dtype=float)
    U = prob.subspace.U
    z_star = U.T @ (prob.x_star - p)
    delta = float(np.linalg.norm(z_star))
    return p, U, z_star, delta


def mc_success_probability(
    prob: SyntheticProblem, p, d: int, N: int, rng: SeededRng
) -> SuccessTrial:
    """Hit frequency of the event that the minimal-norm reduced minimizer is
    feasible, over N fresh Gaussian embeddings anchored at p.

    This is an unbiased estimate of the probability lower-bounded by the
    coverage integral; the anchored-at-the-minimizer case is deterministic
    success via y = 0 and is returned as estimate 1 without sampling.
    """
    if d < prob.d_e:
        raise ValueError("d must be at least the effective dimension")
    if N < 100:
        raise ValueError("N must be >= 100")
    p, U, z_star, delta = _reduction_geometry(prob, p)
    if delta <= 1e-14:
        return _trial(prob, p, d, N, N)
    gen = rng.generator()
    D = prob.D
    hits = 0
    for _ in range(N):
        A = gen.standard_normal((D, d))
        y2 = minimal_norm_y(U.T @ A, z_star)
        x = A @ y2 + p
        if np.abs(x).max() <= 1.0 + _BOX_TOL:
            hits += 1
    return _trial(prob, p, d, N, hits)


def _max_feasible_scale(A_y2, p, lo=0.0, hi=1.0, iters=50) -> float:
    """Largest t in [lo, hi] with t*(A y2) + p inside the box, by bisection."""

    def ok(t):
        return np.abs(t * A_y2 + p).max() <= 1.0 + _BOX_TOL

    if ok(hi):
        return hi
    a, b = lo, hi
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if ok(mid):
            a = mid
        else:
            b = mid
    return a


def success_chain(
    prob: SyntheticProblem, p, d: int, N: int, eps: float, rng: SeededRng,
    search_iters: int = 200,
) -> tuple[SuccessTrial, SuccessTrial]:
    """Sample-coupled estimates of (success, eps-success) probabilities.

    Both events are decided on the same embedding draws, so the eps-success
    count dominates the success count pointwise: a feasible minimal-norm
    minimizer attains f* exactly. When it is infeasible, eps-success is
    probed by walking the candidate back into the box and running a short
    projected random line search; that makes the second coordinate an
    underestimate, which only strengthens the inequality being validated.
    Probing evaluations are bookkeeping and do not tick the counter.
    """
    if d < prob.d_e:
        raise ValueError("d must be at least the effective dimension")
    p, U, z_star, delta = _reduction_geometry(prob, p)
    if delta <= 1e-14:
        return _trial(prob, p, d, N, N), _trial(prob, p, d, N, N)
    gen = rng.generator()
    D = prob.D
    target = prob.f_star + eps
    hits = 0
    eps_hits = 0
    for _ in range(N):
        A = gen.standard_normal((D, d))
        y2 = minimal_norm_y(U.T @ A, z_star)
        Ay2 = A @ y2
        if np.abs(Ay2 + p).max() <= 1.0 + _BOX_TOL:
            hits += 1
            eps_hits += 1
            continue
        t = _max_feasible_scale(Ay2, p)
        y_c = t * y2
        best = prob.peek(A @ y_c + p)
        radius = 0.25 * float(np.linalg.norm(y_c)) / math.sqrt(d) + 0.05
        for _ in range(search_iters):
            if best <= target:
                break
            y_t = y_c + radius * gen.standard_normal(d)
            Ayt = A @ y_t
            if np.abs(Ayt + p).max() > 1.0 + _BOX_TOL:
                s = _max_feasible_scale(Ayt - A @ y_c, p + A @ y_c, iters=30)
                y_t = y_c + s * (y_t - y_c)
            val = prob.peek(A @ y_t + p)
            if val < best:
                best = val
                y_c = y_t
        if best <= target:
            eps_hits += 1
    return _trial(prob, p, d, N, eps_hits), _trial(prob, p, d, N, hits)


def _sample_laws(prob, p, d, N, rng):
    """Per-embedding norm ratio and constant-subspace vector samples."""
    p, U, z_star, delta = _reduction_geometry(prob, p)
    if delta <= 1e-14:
        raise ValueError("degenerate anchor: p_top equals x_top*")
    V = prob.subspace.V
    gen = rng.generator()
    D = prob.D
    ratios = np.empty(N)
    w = np.empty((N, V.shape[1]))
    for i in range(N):
        A = gen.standard_normal((D, d))
        y2 = minimal_norm_y(U.T @ A, z_star)
        ratios[i] = delta**2 / float(y2 @ y2)
        w[i] = V.T @ (A @ y2)
    return ratios, w, delta


def ks_check_chi2(
    prob: SyntheticProblem, p, d: int, N: int, rng: SeededRng, df_offset: int = 0
) -> KsCheck:
    """KS test of ||x_top* - p_top||^2 / ||y2*||^2 against chi-squared with
    d - d_e + 1 degrees of freedom. df_offset deliberately corrupts the
    reference law for negative controls."""
    if N < 2000:
        raise ValueError("N must be >= 2000")
    ratios, _, _ = _sample_laws(prob, p, d, N, rng)
    df = d - prob.d_e + 1 + df_offset
    stat, p_value = stats.kstest(ratios, lambda t: sp.gammainc(df / 2.0, t / 2.0))
    return KsCheck(float(stat), float(p_value), (df,), p_value >= 0.01)


def ks_check_f(
    prob: SyntheticProblem, p, d: int, N: int, rng: SeededRng, swap_df: bool = False
) -> KsCheck:
    """KS test of the scaled squared norm of w against F(D - d_e, d - d_e + 1)."""
    if N < 2000:
        raise ValueError("N must be >= 2000")
    ratios_unused, w, delta = _sample_laws(prob, p, d, N, rng)
    m = prob.D - prob.d_e
    n = d - prob.d_e + 1
    sample = (np.linalg.norm(w, axis=1) ** 2 / delta**2) * (n / m)
    v1, v2 = (n, m) if swap_df else (m, n)

    def cdf(t):
        t = np.asarray(t, dtype=float)
        return sp.betainc(v1 / 2.0, v2 / 2.0, v1 * t / (v1 * t + v2))

    stat, p_value = stats.kstest(sample, cdf)
    return KsCheck(float(stat), float(p_value), (v1, v2), p_value >= 0.01)


def sample_w(prob: SyntheticProblem, p, d: int, N: int, rng: SeededRng) -> np.ndarray:
    """N draws of the constant-subspace vector w = V^T A y2*."""
    _, w, _ = _sample_laws(prob, p, d, N, rng)
    return w


def spherical_check(w_samples: np.ndarray) -> SphericalCheck:
    """Uniformity of w/||w|| on the sphere.

    (i) the projection onto a fixed axis must follow the one-coordinate law
    of the uniform sphere (its square is Beta(1/2, (m-1)/2)); (ii) the
    empirical covariance of the normalized samples must be I/m within
    5/sqrt(N) in max norm. m = 1 degenerates to a sign-balance check.
    """
    w = np.asarray(w_samples, dtype=float)
    N, m = w.shape
    t = w / np.linalg.norm(w, axis=1, keepdims=True)
    cov = (t.T @ t) / N
    cov_dev = float(np.abs(cov - np.eye(m) / m).max())
    cov_tol = 5.0 / math.sqrt(N)
    if m == 1:
        frac = float((t[:, 0] > 0).mean())
        p_proj = float(stats.binomtest(int(round(frac * N)), N, 0.5).pvalue)
    else:

        def proj_cdf(u):
            u = np.asarray(u, dtype=float)
            inner = sp.betainc(0.5, (m - 1) / 2.0, np.clip(u * u, 0.0, 1.0))
            return 0.5 * (1.0 + np.sign(u) * inner)

        _, p_proj = stats.kstest(t[:, 0], proj_cdf)
        p_proj = float(p_proj)
    return SphericalCheck(
        proj_p_value=p_proj,
        cov_deviation=cov_dev,
        cov_tolerance=cov_tol,
        passed=(p_proj >= 0.01) and (cov_dev <= cov_tol),
    )


# --- bounds ------------------------------------------------------------------


def tau_bounds(
    m: int, n: int, d_e: int, cfg: QuadratureConfig | None = None
) -> tuple[float, float]:
    """(tau, tau_0): uniform success lower bounds for arbitrary and zero
    anchors in the aligned case. tau_0 = J(m, n, sqrt(d_e)); tau halves it
    m times because the anchor can sit anywhere in the box."""
    tau0 = integral_J(m, n, math.sqrt(d_e), cfg)
    return 2.0 ** (-m) * tau0, tau0


def tau_epsilon(
    m: int, n: int, D: int, eps: float, lipschitz: float, vol_gstar: float
) -> float:
    """The existential eps-success lower bound with user-supplied Lipschitz
    constant and vol of the constant-coordinate minimizer set; not estimated
    from data anywhere in this package."""
    if eps <= 0 or lipschitz <= 0 or vol_gstar <= 0:
        raise ValueError("eps, lipschitz, vol_gstar must be positive")
    log_c = math.lgamma((m + n) / 2.0) - math.lgamma(n / 2.0) - (m / 2.0) * math.log(
        math.pi
    )
    log_val = (
        log_c
        - m * math.log(2.0 * math.sqrt(D))
        - ((m + n) / 2.0) * math.log1p(9.0 * D**2 * lipschitz**2 / eps**2)
        + math.log(vol_gstar)
    )
    return math.exp(log_val)


def convergence_bound(tau: float, rho: float, k: int) -> float:
    if not (0 < tau <= 1 and 0 < rho <= 1):
        raise ValueError("tau and rho must be in (0, 1]")
    if k < 0:
        raise ValueError("k must be >= 0")
    return 1.0 - (1.0 - tau * rho) ** k

def k_xi(tau: float, rho: float, xi: float) -> int:
    if not (0 < tau <= 1 and 0 < rho <= 1):
        raise ValueError("tau and rho must be in (0, 1]")
    if not (0 < xi < 1):
        raise ValueError("xi must be in (0, 1)")
    return math.ceil(abs(math.log(1.0 - xi)) / (tau * rho))


# --- convergence-curve machinery ---------------------------------------------


def replay_success_flags(
    prob: SyntheticProblem, cfg: RunConfig, ks: range | list[int]
) -> list[bool]:
    """Replay the embedding stream of a zero-anchor run and report, for each
    requested k, whether the drawn subspace contained a feasible minimal-norm
    minimizer. Requires the Origin policy, whose anchors are identically 0,
    so the flags depend only on (master_seed, k)."""
    if cfg.policy.kind != ORIGIN:
        raise ValueError("replay assumes the Origin anchor policy")
    p = np.zeros(prob.D)
    _, U, z_star, delta = _reduction_geometry(prob, p)
    flags = []
    for k in ks:
        A = sample_gaussian(prob.D, cfg.d, SeededRng(cfg.master_seed, 3 * k))
        if delta <= 1e-14:
            flags.append(True)
            continue
        y2 = minimal_norm_y(U.T @ A, z_star)
        flags.append(bool(np.abs(A @ y2 + p).max() <= 1.0 + _BOX_TOL))
    return flags


def estimate_rho(
    prob: SyntheticProblem, records: list[RunRecord], cfgs: list[RunConfig]
) -> tuple[float, int]:
    """Conditional solver reliability: among recorded embeddings whose replay
    shows the subspace held a feasible minimizer, the fraction the solver
    solved to accuracy lambda = epsilon/2. Splitting epsilon evenly between
    subspace quality and solver accuracy keeps the product bound valid while
    both factors stay observable."""
    hit = 0
    total = 0
    for rec, cfg in zip(records, cfgs):
        lam = 0.5 * rec.epsilon
        ks = [step.k for step in rec.steps]
        flags = replay_success_flags(prob, cfg, ks)
        for step, ok in zip(rec.steps, flags):
            if not ok:
                continue
            total += 1
            if step.f_xk - rec.f_star <= lam:
                hit += 1
    if total == 0:
        raise RuntimeError("no successful embeddings observed; cannot estimate rho")
    return hit / total, total


def empirical_curve(records: list[RunRecord], K: int) -> np.ndarray:
    """Fraction of runs whose best point entered the eps-neighborhood by
    embedding k, for k = 1..K (index 0 is k=1)."""
    reach = np.full(len(records), np.inf)
    for i, rec in enumerate(records):
        for step in rec.steps:
            if step.f_xopt - rec.f_star <= rec.epsilon:
                reach[i] = step.k
                break
    ks = np.arange(1, K + 1)
    return (reach[None, :] <= ks[:, None]).mean(axis=1)


# --- the validation suite ----------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    seed: int
    runtime_s: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={v}" for k, v in self.detail.items())
        return f"[{flag}] {self.name} (seed={self.seed}, {self.runtime_s:.2f}s) {extras}"


@dataclass
class TheoryReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        return "\n".join(c.line() for c in self.checks) + (
            "\nall checks passed" if self.passed else "\nFAILURES present"
        )

    def to_csv_rows(self) -> list[dict]:
        rows = []
        for c in self.checks:
            rows.append(
                {
                    "check": c.name,
                    "passed": c.passed,
                    "seed": c.seed,
                    "runtime_s": f"{c.runtime_s:.3f}",
                    "detail": "; ".join(f"{k}={v}" for k, v in c.detail.items()),
                }
            )
        return rows


def _aligned_quadratic(D: int, d_e: int = 2) -> SyntheticProblem:
    center = np.array([0.3, -0.4, 0.25, -0.2, 0.15, -0.35][:d_e])
    return lift(quadratic_base(d_e, center), D, rotation=np.eye(D))


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def check_closed_form(m_max: int = 30) -> CheckResult:
    """J(m, 1, 1) must equal 1/(m+1)."""

    def body():
        errs = [
            abs(integral_J(m, 1, 1.0) - 1.0 / (m + 1)) for m in range(1, m_max + 1)
        ]
        return max(errs)

    err, dt = _timed(body)
    return CheckResult(
        "closed-form J(m,1,1) = 1/(m+1)",
        err <= 1e-6,
        seed=0,
        runtime_s=dt,
        detail={"max_abs_err": f"{err:.2e}", "m_max": m_max},
    )


def check_distribution_laws(seed: int, n_configs: int = 5, N: int = 2000) -> CheckResult:
    """KS tests of the norm-ratio and F laws on random configurations, plus
    negative controls that must fail."""

    def body():
        gen = np.random.default_rng(seed)
        results = []
        for i in range(n_configs):
            d_e = int(gen.integers(1, 4))
            d = d_e + int(gen.integers(0, 4))
            D = int(gen.integers(d + 2, 31))
            prob = _aligned_quadratic(D, d_e=2) if d_e == 2 else lift(
                quadratic_base(d_e, np.full(d_e, 0.3)), D, rotation=np.eye(D)
            )
            p = gen.uniform(-1, 1, D)
            rng = SeededRng(seed, 100 + i)
            chi = ks_check_chi2(prob, p, d, N, rng)
            fck = ks_check_f(prob, p, d, N, rng)
            results.append((d_e, d, D, chi, fck))
        d_e, d, D = 2, 4, 12
        prob = _aligned_quadratic(D)
        p = gen.uniform(-1, 1, D)
        neg_chi = ks_check_chi2(prob, p, d, 5000, SeededRng(seed, 900), df_offset=1)
        neg_f = ks_check_f(prob, p, d, 5000, SeededRng(seed, 901), swap_df=True)
        return results, neg_chi, neg_f

    (results, neg_chi, neg_f), dt = _timed(body)
    all_pass = all(chi.passed and fck.passed for *_c, chi, fck in results)
    controls_fail = (not neg_chi.passed) and (not neg_f.passed)
    return CheckResult(
        "distribution laws (chi2 ratio, F norm) + negative controls",
        all_pass and controls_fail,
        seed=seed,
        runtime_s=dt,
        detail={
            "min_p_chi2": f"{min(c.p_value for *_x, c, _f in results):.3f}",
            "min_p_F": f"{min(f.p_value for *_x, _c, f in results):.3f}",
            "neg_chi2_p": f"{neg_chi.p_value:.1e}",
            "neg_F_p": f"{neg_f.p_value:.1e}",
        },
    )


def check_equality_case(
    seed: int, dims=(6, 10, 20), N: int = 5000
) -> CheckResult:
    """Aligned, d = d_e, unique interior minimizer, p = 0: the Monte-Carlo
    success rate must match the coverage integral within 3 standard errors."""

    def body():
        rows = []
        for i, D in enumerate(dims):
            prob = _aligned_quadratic(D)
            trial = mc_success_probability(
                prob, np.zeros(D), prob.d_e, N, SeededRng(seed, i)
            )
            delta = float(np.linalg.norm(prob.x_star))
            j = integral_J(D - prob.d_e, 1, delta)
            gap = abs(trial.estimate - j)
            limit = 3 * max(trial.std_err, 1e-12)
            rows.append((D, trial.estimate, j, gap, limit, gap <= limit))
        return rows

    rows, dt = _timed(body)
    return CheckResult(
        "bound equality at d=d_e, p=0 (MC vs quadrature)",
        all(r[-1] for r in rows),
        seed=seed,
        runtime_s=dt,
        detail={f"D={r[0]}": f"mc={r[1]:.4f} J={r[2]:.4f}" for r in rows},
    )


def check_bound_ordering(
    seed: int, D: int = 12, n_anchors: int = 20, N: int = 2000
) -> CheckResult:
    """MC success must sit above tau_0 at p = 0 and above tau at random
    anchors, allowing 3 (smoothed) standard errors."""

    def body():
        prob = _aligned_quadratic(D)
        m, n = D - prob.d_e, 1
        tau, tau0 = tau_bounds(m, n, prob.d_e)
        at_zero = mc_success_probability(
            prob, np.zeros(D), prob.d_e, N, SeededRng(seed, 0)
        )
        ok0 = at_zero.estimate >= tau0 - 3 * at_zero.smoothed_err
        gen = np.random.default_rng(seed)
        worst = math.inf
        ok_all = True
        for i in range(n_anchors):
            p = gen.uniform(-1, 1, D)
            trial = mc_success_probability(
                prob, p, prob.d_e, N, SeededRng(seed, 1 + i)
            )
            worst = min(worst, trial.estimate)
            if trial.estimate < tau - 3 * trial.smoothed_err:
                ok_all = False
        return tau, tau0, at_zero, worst, ok0, ok_all

    (tau, tau0, at_zero, worst, ok0, ok_all), dt = _timed(body)
    return CheckResult(
        "bound ordering (MC >= tau_0 at p=0; MC >= tau at random p)",
        ok0 and ok_all,
        seed=seed,
        runtime_s=dt,
        detail={
            "tau0": f"{tau0:.4f}",
            "tau": f"{tau:.2e}",
            "mc_at_zero": f"{at_zero.estimate:.4f}",
            "worst_mc": f"{worst:.4f}",
        },
    )


def check_dimension_decay(seed: int, dims=(6, 12, 24), N: int = 4000) -> CheckResult:
    """Aligned success estimates must not increase with ambient dimension."""

    def body():
        trials = []
        for i, D in enumerate(dims):
            prob = _aligned_quadratic(D)
            trials.append(
                mc_success_probability(
                    prob, np.zeros(D), prob.d_e, N, SeededRng(seed, i)
                )
            )
        ok = True
        for a, b in zip(trials, trials[1:]):
            slack = 3 * math.hypot(a.std_err, b.std_err)
            if b.estimate > a.estimate + slack:
                ok = False
        return trials, ok

    (trials, ok), dt = _timed(body)
    return CheckResult(
        "success probability decays with D",
        ok,
        seed=seed,
        runtime_s=dt,
        detail={f"D={d}": f"{t.estimate:.4f}" for d, t in zip(dims, trials)},
    )


def check_convergence_curve(
    seed: int, runs: int = 200, K: int = 30, D: int = 12
) -> CheckResult:
    """Empirical reach-by-k fraction over seeded zero-anchor runs must
    dominate 1 - (1 - tau_hat rho_hat)^k minus 3 binomial standard errors."""

    def body():
        prob = _aligned_quadratic(D)
        eps = 1e-3
        budget = SolverBudget(300, target_value=prob.f_star + 0.5 * eps)
        records, cfgs = [], []
        for r in range(runs):
            cfg = RunConfig(
                d=prob.d_e,
                policy=PPolicy(ORIGIN),
                solver=SolverSpec(DIRECT_GLOBAL),
                per_embedding_budget=budget,
                master_seed=seed * 100003 + r,
                K=K,
                epsilon=eps,
            )
            records.append(run(prob.clone(), cfg))
            cfgs.append(cfg)
        tau_hat = mc_success_probability(
            prob, np.zeros(D), prob.d_e, 5000, SeededRng(seed, 777)
        ).estimate
        rho_hat, n_cond = estimate_rho(prob, records, cfgs)
        curve = empirical_curve(records, K)
        ok = True
        margin = math.inf
        for k in range(1, K + 1):
            bound = convergence_bound(tau_hat, max(rho_hat, 1e-12), k)
            q = (curve[k - 1] * runs + 1) / (runs + 2)
            se = math.sqrt(q * (1 - q) / runs)
            margin = min(margin, curve[k - 1] - (bound - 3 * se))
            if curve[k - 1] < bound - 3 * se:
                ok = False
        return tau_hat, rho_hat, n_cond, curve, ok, margin

    (tau_hat, rho_hat, n_cond, curve, ok, margin), dt = _timed(body)
    return CheckResult(
        "convergence curve dominates 1-(1-tau rho)^k",
        ok,
        seed=seed,
        runtime_s=dt,
        detail={
            "tau_hat": f"{tau_hat:.4f}",
            "rho_hat": f"{rho_hat:.4f}",
            "conditioning_embeddings": n_cond,
            "final_reach": f"{curve[-1]:.3f}",
            "worst_margin": f"{margin:.4f}",
        },
    )


def check_structural(seed: int, n_instances: int = 100) -> CheckResult:
    """Algebraic invariants on randomized instances: basis orthogonality,
    minimal-norm optimality of y2* against null-space perturbations, the
    reconstruction identity A y2* = U z* + V w, constancy of f along the
    complement subspace, monotone running minima, and feasibility of every
    point a run returns."""

    def body():
        gen = np.random.default_rng(seed)
        worst = {"orth": 0.0, "minnorm": 0.0, "recon": 0.0, "const": 0.0}
        for i in range(n_instances):
            d_e = int(gen.integers(1, 5))
            D = int(gen.integers(d_e + 2, 21))
            d = d_e + int(gen.integers(0, 3))
            prob = lift(
                quadratic_base(d_e, gen.uniform(-0.5, 0.5, d_e)),
                D,
                rng=SeededRng(seed, 10 + i),
            )
            U, V = prob.subspace.U, prob.subspace.V
            worst["orth"] = max(
                worst["orth"],
                float(np.abs(U.T @ U - np.eye(d_e)).max()),
                float(np.abs(V.T @ V - np.eye(D - d_e)).max()),
                float(np.abs(U.T @ V).max()),
            )
            p = gen.uniform(-1, 1, D)
            A = sample_gaussian(D, d, SeededRng(seed, 500 + i))
            B = U.T @ A
            z_star = U.T @ (prob.x_star - p)
            y2 = minimal_norm_y(B, z_star)
            if d > d_e:
                null = np.linalg.svd(B)[2][d_e:].T
                for _ in range(5):
                    eta = gen.standard_normal(d - d_e)
                    alt = y2 + null @ eta
                    worst["minnorm"] = max(
                        worst["minnorm"],
                        float(np.linalg.norm(y2) - np.linalg.norm(alt)),
                    )
            w = V.T @ (A @ y2)
            worst["recon"] = max(
                worst["recon"],
                float(np.linalg.norm(A @ y2 - (U @ z_star + V @ w))),
            )
            x = gen.uniform(-1, 1, D)
            r = gen.standard_normal(D - d_e) * 0.3
            worst["const"] = max(
                worst["const"], abs(prob.peek(x + V @ r) - prob.peek(x))
            )
        runs_ok = True
        feas_ok = True
        for j in range(8):
            prob = lift(
                quadratic_base(2, np.array([0.3, -0.4])),
                12,
                rng=SeededRng(seed, 900 + j),
            )
            cfg = RunConfig(
                d=2,
                policy=PPolicy(("Adaptive", "LocalAdaptive", "Origin", "UniformRandom")[j % 4]),
                solver=SolverSpec(SINGLE_START_LOCAL),
                per_embedding_budget=SolverBudget(60),
                master_seed=seed + j,
                K=6,
                epsilon=1e-3,
            )
            rec = run(prob, cfg)
            fs = [s.f_xk for s in rec.steps]
            trace = [s.f_xopt for s in rec.steps]
            if not np.allclose(np.minimum.accumulate(fs), trace):
                runs_ok = False
            if any(np.abs(x).max() > 1 + 1e-9 for x in rec.xs):
                feas_ok = False
        return worst, runs_ok, feas_ok

    (worst, runs_ok, feas_ok), dt = _timed(body)
    ok = (
        worst["orth"] <= 1e-10
        and worst["minnorm"] <= 1e-8
        and worst["recon"] <= 1e-8
        and worst["const"] <= 1e-9
        and runs_ok
        and feas_ok
    )
    return CheckResult(
        "structural invariants (orthogonality, min-norm, reconstruction, constancy, runs)",
        ok,
        seed=seed,
        runtime_s=dt,
        detail={k: f"{v:.1e}" for k, v in worst.items()}
        | {"running_min_ok": runs_ok, "feasible_ok": feas_ok},
    )


def validation_suite(seed: int, quick: bool = False) -> TheoryReport:
    """The full statistical validation battery behind the `validate` command."""
    report = TheoryReport()
    report.checks.append(check_closed_form())
    report.checks.append(check_distribution_laws(seed, N=2000))
    report.checks.append(check_equality_case(seed, N=5000 if not quick else 2000))
    report.checks.append(check_bound_ordering(seed, n_anchors=20 if not quick else 6))
    report.checks.append(check_dimension_decay(seed, N=4000 if not quick else 1500))
    report.checks.append(check_structural(seed, n_instances=100 if not quick else 30))
    if not quick:
        report.checks.append(check_convergence_curve(seed))
    return report
