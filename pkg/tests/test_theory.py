"""Statistical validators: estimators, laws, bounds, and curve machinery.

Where a closed form exists (tau at m = n = d_e = 1, the eps-bound constant,
the geometric convergence bound) the expected numbers are recomputed inline
through an independent arithmetic route.
"""

import math

import numpy as np
import pytest

from xrego.driver import ORIGIN, UNIFORM_RANDOM, EmbeddingStep, PPolicy, RunConfig, RunRecord
from xrego.embedcore import SeededRng
from xrego.numerics import integral_J
from xrego.problems import lift, quadratic_base
from xrego.solvers import SINGLE_START_LOCAL, SolverBudget, SolverSpec
from xrego.theory import (
    CheckResult,
    SuccessTrial,
    TheoryReport,
    check_closed_form,
    check_structural,
    convergence_bound,
    empirical_curve,
    estimate_rho,
    k_xi,
    ks_check_chi2,
    ks_check_f,
    mc_success_probability,
    replay_success_flags,
    sample_w,
    spherical_check,
    success_chain,
    tau_bounds,
    tau_epsilon,
)


def _aligned_quad(D, d_e=2, center=None):
    if center is None:
        center = (0.3, -0.4, 0.25, -0.2)[:d_e]
    return lift(quadratic_base(d_e, center), D, rotation=np.eye(D))


def _origin_cfg(d, master_seed=5, K=4, epsilon=1e-3):
    return RunConfig(
        d=d,
        policy=PPolicy(kind=ORIGIN),
        solver=SolverSpec(kind=SINGLE_START_LOCAL),
        per_embedding_budget=SolverBudget(max_evals=30),
        master_seed=master_seed,
        K=K,
        epsilon=epsilon,
    )


class TestSuccessTrial:
    def test_error_formulas(self):
        t = SuccessTrial(
            problem="quadratic", p=np.zeros(2), d=2, N=100, hits=30,
            estimate=0.3, std_err=math.sqrt(0.3 * 0.7 / 100),
        )
        q = 31 / 102
        assert t.smoothed_err == pytest.approx(math.sqrt(q * (1 - q) / 100))

    def test_smoothed_error_never_zero(self):
        t = SuccessTrial(
            problem="quadratic", p=np.zeros(2), d=2, N=500, hits=0,
            estimate=0.0, std_err=0.0,
        )
        assert t.std_err == 0.0
        assert t.smoothed_err > 0.0


class TestMcSuccess:
    def test_anchor_at_minimizer_is_certain(self):
        prob = _aligned_quad(6)
        t = mc_success_probability(prob, prob.x_star, 3, 200, SeededRng(1))
        assert t.estimate == 1.0
        assert t.hits == t.N == 200

    def test_estimate_fields_consistent(self):
        prob = _aligned_quad(6)
        t = mc_success_probability(prob, np.zeros(6), 3, 300, SeededRng(2))
        assert 0.0 <= t.estimate <= 1.0
        assert t.estimate == t.hits / t.N
        assert t.std_err == pytest.approx(
            math.sqrt(t.estimate * (1 - t.estimate) / t.N)
        )

    def test_matches_coverage_integral_at_zero_anchor(self):
        # aligned case, d = d_e: the success probability equals J(m, n, delta)
        prob = _aligned_quad(6, d_e=1, center=(0.5,))
        t = mc_success_probability(prob, np.zeros(6), 1, 3000, SeededRng(3))
        ref = integral_J(5, 1, 0.5)
        se = math.sqrt(ref * (1 - ref) / 3000)
        assert abs(t.estimate - ref) <= 4 * se

    def test_validation(self):
        prob = _aligned_quad(6)
        with pytest.raises(ValueError):
            mc_success_probability(prob, np.zeros(6), 1, 200, SeededRng(1))
        with pytest.raises(ValueError):
            mc_success_probability(prob, np.zeros(6), 3, 50, SeededRng(1))


class TestSuccessChain:
    def test_eps_success_dominates(self):
        prob = _aligned_quad(6)
        gen = np.random.default_rng(12)
        for _ in range(3):
            p = gen.uniform(-0.8, 0.8, 6)
            eps_t, plain_t = success_chain(prob, p, 2, 150, 0.5, SeededRng(4))
            assert eps_t.hits >= plain_t.hits
            assert eps_t.N == plain_t.N == 150

    def test_degenerate_anchor(self):
        prob = _aligned_quad(6)
        eps_t, plain_t = success_chain(prob, prob.x_star, 2, 150, 0.1, SeededRng(4))
        assert eps_t.estimate == plain_t.estimate == 1.0

    def test_dimension_check(self):
        prob = _aligned_quad(6)
        with pytest.raises(ValueError):
            success_chain(prob, np.zeros(6), 1, 150, 0.1, SeededRng(4))


class TestDistributionLaws:
    def test_chi2_law_holds(self):
        prob = _aligned_quad(8)
        check = ks_check_chi2(prob, np.full(8, 0.2), 4, 2500, SeededRng(6))
        assert check.passed
        assert check.df == (3,)

    def test_chi2_negative_control(self):
        prob = _aligned_quad(8)
        check = ks_check_chi2(
            prob, np.full(8, 0.2), 4, 2500, SeededRng(6), df_offset=2
        )
        assert not check.passed
        assert check.p_value < 1e-6

    def test_f_law_holds(self):
        prob = _aligned_quad(8)
        check = ks_check_f(prob, np.full(8, 0.2), 4, 2500, SeededRng(7))
        assert check.passed
        assert check.df == (6, 3)

    def test_f_negative_control(self):
        prob = _aligned_quad(8)
        check = ks_check_f(
            prob, np.full(8, 0.2), 4, 2500, SeededRng(7), swap_df=True
        )
        assert not check.passed

    def test_sample_size_floor(self):
        prob = _aligned_quad(8)
        with pytest.raises(ValueError):
            ks_check_chi2(prob, np.full(8, 0.2), 4, 500, SeededRng(6))
        with pytest.raises(ValueError):
            ks_check_f(prob, np.full(8, 0.2), 4, 500, SeededRng(6))

    def test_degenerate_anchor_rejected(self):
        prob = _aligned_quad(8)
        with pytest.raises(ValueError):
            ks_check_chi2(prob, prob.x_star, 4, 2500, SeededRng(6))


class TestSphericalCheck:
    def test_uniform_direction_passes(self):
        prob = _aligned_quad(8)
        w = sample_w(prob, np.full(8, 0.15), 4, 2000, SeededRng(8))
        assert w.shape == (2000, 6)
        check = spherical_check(w)
        assert check.passed
        assert check.cov_deviation <= check.cov_tolerance

    def test_corrupted_axis_fails(self):
        prob = _aligned_quad(8)
        w = sample_w(prob, np.full(8, 0.15), 4, 2000, SeededRng(8)).copy()
        w[:, 0] *= 3.0
        assert not spherical_check(w).passed

    def test_one_dimensional_constant_subspace(self):
        prob = _aligned_quad(3)
        w = sample_w(prob, np.full(3, 0.15), 2, 2000, SeededRng(9))
        assert w.shape == (2000, 1)
        assert spherical_check(w).passed


class TestBounds:
    def test_unit_case_closed_form(self):
        tau, tau0 = tau_bounds(1, 1, 1)
        assert tau0 == pytest.approx(0.5, abs=1e-6)
        assert tau == pytest.approx(0.25, abs=1e-6)

    def test_order_and_range(self):
        for m, n, d_e in ((3, 2, 2), (10, 1, 4), (5, 5, 1)):
            tau, tau0 = tau_bounds(m, n, d_e)
            assert 0.0 < tau <= tau0 <= 1.0
            assert tau == pytest.approx(2.0 ** (-m) * tau0, rel=1e-12)

    def test_eps_bound_recompute(self):
        m, n, D, eps, lip, vol = 3, 2, 5, 0.1, 1.0, 0.7
        c = math.gamma((m + n) / 2.0) / (math.pi ** (m / 2.0) * math.gamma(n / 2.0))
        want = (
            c
            * (2.0 * math.sqrt(D)) ** (-m)
            * (1.0 + 9.0 * D**2 * lip**2 / eps**2) ** (-(m + n) / 2.0)
            * vol
        )
        assert tau_epsilon(m, n, D, eps, lip, vol) == pytest.approx(want, rel=1e-12)

    def test_eps_bound_monotone_in_eps(self):
        lo = tau_epsilon(3, 2, 5, 0.01, 1.0, 0.7)
        hi = tau_epsilon(3, 2, 5, 0.1, 1.0, 0.7)
        assert lo < hi

    def test_eps_bound_survives_extreme_dims(self):
        # naive gamma arithmetic overflows for m this large; the log-space
        # route must stay finite and never produce NaN or a value >= 1,
        # even when the true bound underflows to zero
        val = tau_epsilon(500, 3, 1000, 1e-4, 10.0, 1e-6)
        assert math.isfinite(val)
        assert 0.0 <= val < 1.0

    def test_eps_bound_large_dims_match_direct_product(self):
        # every factor is representable here, but gamma((m+n)/2) already
        # needs ~1e110, so agreement pins the log-space route at scale
        m, n, D, eps, lip, vol = 150, 3, 200, 30.0, 0.1, 0.5
        direct = (
            math.gamma((m + n) / 2.0)
            / (math.pi ** (m / 2.0) * math.gamma(n / 2.0))
            * (2.0 * math.sqrt(D)) ** (-m)
            * (1.0 + 9.0 * D**2 * lip**2 / eps**2) ** (-(m + n) / 2.0)
            * vol
        )
        assert 0.0 < direct < 1.0
        assert tau_epsilon(m, n, D, eps, lip, vol) == pytest.approx(direct, rel=1e-10)

    def test_eps_bound_validation(self):
        for bad in ((0.0, 1.0, 0.5), (0.1, -1.0, 0.5), (0.1, 1.0, 0.0)):
            with pytest.raises(ValueError):
                tau_epsilon(3, 2, 5, *bad)


class TestConvergenceAlgebra:
    def test_bound_values(self):
        assert convergence_bound(0.5, 1.0, 0) == 0.0
        assert convergence_bound(1.0, 1.0, 3) == 1.0
        assert convergence_bound(0.2, 0.5, 7) == pytest.approx(1 - 0.9**7)

    def test_bound_monotone_in_k(self):
        vals = [convergence_bound(0.1, 0.8, k) for k in range(30)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_bound_validation(self):
        with pytest.raises(ValueError):
            convergence_bound(0.0, 1.0, 1)
        with pytest.raises(ValueError):
            convergence_bound(0.5, 1.5, 1)
        with pytest.raises(ValueError):
            convergence_bound(0.5, 1.0, -1)

    def test_k_xi_guarantees_confidence(self):
        for tau, rho, xi in ((0.25, 1.0, 0.95), (0.05, 0.9, 0.99), (0.5, 0.5, 0.9)):
            K = k_xi(tau, rho, xi)
            assert isinstance(K, int)
            assert convergence_bound(tau, rho, K) >= xi
            assert K == math.ceil(abs(math.log(1 - xi)) / (tau * rho))

    def test_k_xi_validation(self):
        with pytest.raises(ValueError):
            k_xi(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            k_xi(0.5, 1.0, 0.0)
        with pytest.raises(ValueError):
            k_xi(0.0, 1.0, 0.5)


def _step(k, f_xk, f_xopt, status="BudgetExhausted"):
    return EmbeddingStep(
        k=k, f_xk=f_xk, f_xopt=f_xopt, cum_evals=10 * k, p_digest="0" * 16,
        success=False, status=status,
    )


def _record(steps, epsilon=1e-3, f_star=0.0):
    return RunRecord(
        problem="quadratic", D=5, d=2, variant=ORIGIN,
        solver=SINGLE_START_LOCAL, master_seed=5, f_star=f_star,
        epsilon=epsilon, steps=steps,
    )


class TestReplayAndRho:
    def test_flags_true_when_minimizer_at_origin(self):
        prob = _aligned_quad(5, d_e=2, center=(0.0, 0.0))
        flags = replay_success_flags(prob, _origin_cfg(2), range(1, 5))
        assert flags == [True] * 4

    def test_flags_deterministic(self):
        prob = _aligned_quad(5)
        a = replay_success_flags(prob, _origin_cfg(2, master_seed=11), range(1, 30))
        b = replay_success_flags(prob, _origin_cfg(2, master_seed=11), range(1, 30))
        assert a == b
        assert any(a) and not all(a)  # nontrivial split at this geometry

    def test_requires_origin_policy(self):
        prob = _aligned_quad(5)
        cfg = RunConfig(
            d=2, policy=PPolicy(kind=UNIFORM_RANDOM),
            solver=SolverSpec(kind=SINGLE_START_LOCAL),
            per_embedding_budget=SolverBudget(max_evals=30), master_seed=5,
        )
        with pytest.raises(ValueError):
            replay_success_flags(prob, cfg, range(1, 3))

    def test_rho_hand_computed(self):
        # minimizer at the origin makes every replay flag true, so rho is the
        # plain fraction of steps solved to epsilon/2 accuracy
        prob = _aligned_quad(5, d_e=2, center=(0.0, 0.0))
        steps = [
            _step(1, 4e-4, 4e-4),   # within lambda = 5e-4
            _step(2, 2e-3, 4e-4),   # outside
            _step(3, 1e-5, 1e-5),   # within
            _step(4, 6e-4, 1e-5),   # outside
        ]
        rho, total = estimate_rho(prob, [_record(steps)], [_origin_cfg(2)])
        assert total == 4
        assert rho == pytest.approx(0.5)

    def test_rho_requires_observations(self):
        prob = _aligned_quad(5)
        with pytest.raises(RuntimeError):
            estimate_rho(prob, [], [])


class TestEmpiricalCurve:
    def test_hand_oracle(self):
        recs = [
            _record([_step(1, 1.0, 1.0), _step(2, 1e-5, 1e-5)]),
            _record([_step(1, 5e-4, 5e-4)]),
            _record([_step(1, 1.0, 1.0), _step(2, 1.0, 1.0), _step(3, 1.0, 1.0)]),
        ]
        curve = empirical_curve(recs, 3)
        assert np.allclose(curve, [1 / 3, 2 / 3, 2 / 3])

    def test_monotone_and_bounded(self):
        recs = [_record([_step(1, 1.0, 1.0), _step(2, 1e-9, 1e-9)])]
        curve = empirical_curve(recs, 5)
        assert curve.shape == (5,)
        assert np.all(np.diff(curve) >= 0)
        assert np.all((curve >= 0) & (curve <= 1))


class TestSuiteScaffolding:
    def test_check_result_line(self):
        ok = CheckResult(name="demo", passed=True, seed=3, runtime_s=0.125,
                         detail={"margin": 0.5})
        bad = CheckResult(name="demo", passed=False, seed=3, runtime_s=0.125)
        assert ok.line().startswith("[PASS] demo (seed=3, 0.12s)")
        assert "margin=0.5" in ok.line()
        assert bad.line().startswith("[FAIL]")

    def test_report_aggregation(self):
        report = TheoryReport()
        report.checks.append(
            CheckResult(name="a", passed=True, seed=1, runtime_s=0.0)
        )
        assert report.passed
        assert "all checks passed" in report.to_text()
        report.checks.append(
            CheckResult(name="b", passed=False, seed=1, runtime_s=0.0)
        )
        assert not report.passed
        assert "FAILURES present" in report.to_text()
        rows = report.to_csv_rows()
        assert [r["check"] for r in rows] == ["a", "b"]
        assert set(rows[0]) == {"check", "passed", "seed", "runtime_s", "detail"}

    def test_closed_form_check_passes(self):
        res = check_closed_form()
        assert res.passed
        assert float(res.detail["max_abs_err"]) <= 1e-6

    def test_structural_check_passes(self):
        res = check_structural(seed=1234, n_instances=12)
        assert res.passed
