"""Special functions and quadrature behind the success-probability bounds.

The two workhorses are the box-coverage integrals

    J(m, n, delta) = [1 / (2^(n/2-1) Gamma(n/2))] *
        integral_0^inf ( sqrt(2/pi) integral_0^(s/delta) e^(-x^2/2) dx )^m
        s^(n-1) e^(-s^2/2) ds

and its anchored generalization I(p, delta) where each coordinate factor is a
Gaussian CDF difference over [-1 - p_i, 1 - p_i]. Substituting u = s/(sqrt(2)
delta) turns J into the form actually integrated here,

    J(m, n, delta) = (2 delta^n / Gamma(n/2)) *
        integral_0^inf erf(u)^m u^(n-1) e^(-delta^2 u^2) du,

whose integrand is bounded by u^(n-1) e^(-delta^2 u^2), so the truncation
point can be chosen analytically from the incomplete-gamma tail.

chi-squared and F distribution CDFs are thin wrappers over the regularized
incomplete gamma/beta functions; erf is the C-library implementation. All are
accurate well past the 1e-9 contract used by the Kolmogorov-Smirnov checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sp

__all__ = [
    "QuadratureConfig",
    "DistributionParams",
    "QuadratureError",
    "UnsupportedCaseError",
    "DegenerateDistributionError",
    "erf",
    "chi2_cdf",
    "f_cdf",
    "pdf_w",
    "integral_J",
    "integral_I",
    "asymptotic_J",
]

_TAIL_MASS = 1e-12


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""


class UnsupportedCaseError(ValueError):
    """A closed-form evaluation path was requested outside its validity domain."""


class DegenerateDistributionError(ValueError):
    """The distribution degenerates (delta = 0, i.e. x_top* = p_top)."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the 1-d adaptive quadratures.

    tail_cutoff, when given, overrides the analytic truncation point; it must
    leave less than 1e-12 of integrand mass beyond it.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    tail_cutoff: float | None = None
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.tail_cutoff is not None and self.tail_cutoff <= 0:
            raise ValueError("tail_cutoff must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class DistributionParams:
    """Parameters (m, n, delta): constant-subspace dimension D - d_e,
    half-degrees n = d - d_e + 1, and the anchor distance ||x_top* - p_top||."""

    m: int
    n: int
    delta: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


def erf(x: float) -> float:
    """The error function, exact odd symmetry, |error| <= 1e-12."""
    return math.erf(x)


def chi2_cdf(x: float, k: int) -> float:
    """CDF of the chi-squared distribution with k degrees of freedom."""
    if k < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x < 0:
        raise ValueError("chi-squared support is x >= 0")
    return float(sp.gammainc(k / 2.0, x / 2.0))


def f_cdf(x: float, v1: int, v2: int) -> float:
    """CDF of the F(v1, v2) distribution."""
    if v1 < 1 or v2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x < 0:
        raise ValueError("F support is x >= 0")
    if x == 0:
        return 0.0
    return float(sp.betainc(v1 / 2.0, v2 / 2.0, v1 * x / (v1 * x + v2)))


def pdf_w(wbar: np.ndarray, params: DistributionParams) -> float:
    """Density of the constant-subspace vector w: an m-dimensional t-type law

        g(w) = (sqrt(pi) delta)^(-m) * Gamma((m+n)/2)/Gamma(n/2)
               * (1 + ||w||^2 / delta^2)^(-(m+n)/2).

    Spherically symmetric and strictly positive; undefined at delta = 0 where
    the law collapses to a point mass.
    """
    if params.delta == 0:
        raise DegenerateDistributionError(
            "delta = 0 collapses w to a point mass (x_top* = p_top); no density"
        )
    wbar = np.atleast_1d(np.asarray(wbar, dtype=float))
    if wbar.shape[0] != params.m:
        raise ValueError(f"wbar must have length m = {params.m}")
    m, n, delta = params.m, params.n, params.delta
    log_norm = (
        -m * (0.5 * math.log(math.pi) + math.log(delta))
        + math.lgamma((m + n) / 2.0)
        - math.lgamma(n / 2.0)
    )
    q = float(wbar @ wbar) / delta**2
    return math.exp(log_norm - 0.5 * (m + n) * math.log1p(q))


def _tail_cutoff_J(n: int, delta: float) -> float:
    # beyond s, integrand <= s^(n-1) e^(-delta^2 s^2); relative tail mass of
    # that envelope is gammaincc(n/2, delta^2 s^2)
    return math.sqrt(float(sp.gammainccinv(n / 2.0, _TAIL_MASS))) / delta * 1.05


def _quad(f, upper: float, cfg: QuadratureConfig, label: str) -> float:
    value, abserr, info = integrate.quad(
        f,
        0.0,
        upper,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        full_output=True,
    )[:3]
    achieved = abserr / max(abs(value), 1e-300)
    if abserr > 10 * max(cfg.abs_tol, cfg.rel_tol * abs(value)):
        raise QuadratureError(
            f"{label}: quadrature did not converge; achieved abs error "
            f"{abserr:.3e} (relative {achieved:.3e}), requested "
            f"abs {cfg.abs_tol:.1e} / rel {cfg.rel_tol:.1e}"
        )
    return value


def integral_J(m: int, n: int, delta: float, cfg: QuadratureConfig | None = None) -> float:
    """The coverage integral J(m, n, delta) in (0, 1].

    Monotonically decreasing in delta; J(m, 1, 1) = 1/(m+1) exactly.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    cfg = cfg or QuadratureConfig()
    s_max = cfg.tail_cutoff if cfg.tail_cutoff is not None else _tail_cutoff_J(n, delta)
    log_pref = math.log(2.0) + n * math.log(delta) - math.lgamma(n / 2.0)

    def integrand(u: float) -> float:
        if u <= 0.0:
            return 0.0
        e = math.erf(u)
        if e <= 0.0:
            return 0.0
        logv = m * math.log(e) + (n - 1) * math.log(u) - delta**2 * u * u
        return math.exp(log_pref + logv)

    return _quad(integrand, s_max, cfg, f"J(m={m}, n={n}, delta={delta})")


def integral_I(
    p: np.ndarray,
    x_top_star: np.ndarray,
    sub,
    n: int,
    cfg: QuadratureConfig | None = None,
) -> float:
    """The anchored coverage integral I(p, delta) for a coordinate-aligned subspace.

    Valid only when U spans the leading d_e coordinate axes, which turns the
    inner (D - d_e)-dimensional Gaussian box probability into a product of
    one-dimensional erf differences. Returns a value in [0, 1]; reduces to
    J(m, n, delta) at p = 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = cfg or QuadratureConfig()
    if not sub.is_aligned():
        raise UnsupportedCaseError(
            "integral_I requires the coordinate-aligned subspace; the product "
            "form over the constant coordinates does not hold otherwise"
        )
    p = np.asarray(p, dtype=float)
    x_top_star = np.asarray(x_top_star, dtype=float)
    d_e = sub.d_e
    D = sub.dim
    if p.shape[0] != D or x_top_star.shape[0] != D:
        raise ValueError("p and x_top_star must be D-vectors")
    m = D - d_e
    delta = float(np.linalg.norm(x_top_star[:d_e] - p[:d_e]))
    if delta == 0:
        raise DegenerateDistributionError("delta = 0: anchored at the minimizer")
    p_tail = p[d_e:]
    lo = (-1.0 - p_tail) / (math.sqrt(2.0) * delta)
    hi = (1.0 - p_tail) / (math.sqrt(2.0) * delta)
    s_max = (
        cfg.tail_cutoff
        if cfg.tail_cutoff is not None
        else math.sqrt(2.0 * float(sp.gammainccinv(n / 2.0, _TAIL_MASS))) * 1.05
    )
    log_pref = -(n / 2.0 - 1.0) * math.log(2.0) - math.lgamma(n / 2.0)

    def integrand(s: float) -> float:
        if s <= 0.0:
            return 0.0
        factors = 0.5 * (sp.erf(s * hi) - sp.erf(s * lo))
        if np.any(factors <= 0.0):
            return 0.0
        logv = float(np.log(factors).sum()) + (n - 1) * math.log(s) - 0.5 * s * s
        return math.exp(log_pref + logv)

    return _quad(integrand, s_max, cfg, f"I(p, delta={delta:.4g}; m={m}, n={n})")


def asymptotic_J(m: int, n: int, delta: float) -> float:
    """Two-term large-m expansion of J(m, n, delta):

        C(n, delta) / (m+1)^(delta^2) *
            [ (log(m+1))^r - (r/2) log(log(m+1)) (log(m+1))^(r-1) ]

    with C(n, delta) = pi^(delta^2/2) delta^n Gamma(delta^2) / Gamma(n/2) and
    r = (n + delta^2 - 2) / 2. The r = 0 branch (n = 1, delta = 1) is exact:
    1/(m+1).
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    if delta == 0:
        raise ValueError("delta = 0 hits the Gamma(delta^2) pole; no expansion")
    if delta < 0:
        raise ValueError("delta must be > 0")
    r = (n + delta**2 - 2.0) / 2.0
    if abs(r) < 1e-12:
        return 1.0 / (m + 1.0)
    c = (
        math.pi ** (delta**2 / 2.0)
        * delta**n
        * math.gamma(delta**2)
        / math.gamma(n / 2.0)
    )
    big_l = math.log(m + 1.0)
    lead = big_l**r
    correction = 0.0 if big_l <= 0 else (r / 2.0) * math.log(big_l) * big_l ** (r - 1.0)
    return c / (m + 1.0) ** (delta**2) * (lead - correction)
