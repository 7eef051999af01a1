"""Benchmark objectives with low effective dimensionality.

Nineteen classic global-optimization test functions form the base set. Each
base function g-bar lives on a small native box in d_e variables. A full
problem hides the base inside a D-dimensional cube: scale the native box to
[-1,1]^(d_e), append D - d_e coordinates the function ignores, and rotate by
a random orthogonal Q, giving

    f(x) = g(Q x),   g(z) = g_bar(z_1, ..., z_(d_e)).

The first d_e rows of Q then span the effective subspace and the remaining
rows span the constant subspace. Since Q is orthogonal, f only ever needs the
d_e inner products U^T x, which keeps evaluation cheap even at large D.

Base minima below were refined to near machine precision with a Nelder-Mead
polish of the published minimizers, so the stored (x_star, f_star) pairs are
self-consistent well beyond the 1e-4 tolerance the published rounded values
allow.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .embedcore import EffectiveSubspace, SeededRng, _haar_from_generator

__all__ = [
    "BaseFunction",
    "SyntheticProblem",
    "base_function",
    "base_names",
    "quadratic_base",
    "scale_to_unit_box",
    "lift",
    "evaluate",
    "generate",
    "manifest_seed",
    "default_manifest",
    "write_manifest",
    "load_manifest",
]

Evaluator = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class BaseFunction:
    """A named objective on a native box, with one known global minimizer.

    minimizer_count records how many distinct global minimizers exist (success
    checks compare f-values, never distances to x_star). unsupported_by lists
    solver families that rejected this function in published benchmark runs;
    the harness can filter on it to mirror those experiments.
    """

    name: str
    d_e: int
    native_domain: tuple[tuple[float, float], ...]
    f_star: float
    x_star_native: tuple[float, ...]
    evaluator: Evaluator
    minimizer_count: int = 1
    unsupported_by: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.native_domain) != self.d_e or len(self.x_star_native) != self.d_e:
            raise ValueError(f"{self.name}: domain/minimizer arity mismatch")
        for lo, hi in self.native_domain:
            if not (lo < hi):
                raise ValueError(f"{self.name}: empty domain interval")

    def __call__(self, x) -> float:
        return float(self.evaluator(np.asarray(x, dtype=float)))


# --- the base formulas -------------------------------------------------------


def _beale(x):
    x1, x2 = x
    return (
        (1.5 - x1 + x1 * x2) ** 2
        + (2.25 - x1 + x1 * x2**2) ** 2
        + (2.625 - x1 + x1 * x2**3) ** 2
    )


def _branin(x):
    x1, x2 = x
    b = 5.1 / (4 * np.pi**2)
    c = 5 / np.pi
    t = 1 / (8 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


def _brent(x):
    x1, x2 = x
    return (x1 + 10) ** 2 + (x2 + 10) ** 2 + np.exp(-(x1**2) - x2**2)


def _bukin6(x):
    x1, x2 = x
    return 100 * np.sqrt(abs(x2 - 0.01 * x1**2)) + 0.01 * abs(x1 + 10)


def _easom(x):
    x1, x2 = x
    return -np.cos(x1) * np.cos(x2) * np.exp(-((x1 - np.pi) ** 2) - (x2 - np.pi) ** 2)


def _goldstein_price(x):
    x1, x2 = x
    a = 1 + (x1 + x2 + 1) ** 2 * (
        19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2
    )
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (
        18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2 + 27 * x2**2
    )
    return a * b


_HART_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HART3_A = np.array([[3, 10, 30], [0.1, 10, 35], [3, 10, 30], [0.1, 10, 35]], float)
_HART3_P = 1e-4 * np.array(
    [[3689, 1170, 2673], [4699, 4387, 7470], [1091, 8732, 5547], [381, 5743, 8828]]
)
_HART6_A = np.array(
    [
        [10, 3, 17, 3.5, 1.7, 8],
        [0.05, 10, 17, 0.1, 8, 14],
        [3, 3.5, 1.7, 10, 17, 8],
        [17, 8, 0.05, 10, 0.1, 14],
    ]
)
_HART6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _hartmann3(x):
    inner = ((x - _HART3_P) ** 2 * _HART3_A).sum(axis=1)
    return -(_HART_ALPHA * np.exp(-inner)).sum()


def _hartmann6(x):
    inner = ((x - _HART6_P) ** 2 * _HART6_A).sum(axis=1)
    return -(_HART_ALPHA * np.exp(-inner)).sum()


def _levy(x):
    w = 1 + (x - 1) / 4
    head = np.sin(np.pi * w[0]) ** 2
    mid = ((w[:-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:-1] + 1) ** 2)).sum()
    tail = (w[-1] - 1) ** 2 * (1 + np.sin(2 * np.pi * w[-1]) ** 2)
    return head + mid + tail


def _perm4(x):
    # Perm(d=4, beta=0.5); f(1, 1/2, 1/3, 1/4) = 0 pins this variant
    beta = 0.5
    total = 0.0
    for i in range(1, 5):
        inner = sum((j + beta) * (x[j - 1] ** i - j ** (-i)) for j in range(1, 5))
        total += inner**2
    return total


def _rosenbrock(x):
    return (100 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2).sum()


_SHEKEL_C = np.array(
    [
        [4, 1, 8, 6, 3, 2, 5, 8, 6, 7],
        [4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6],
        [4, 1, 8, 6, 3, 2, 5, 8, 6, 7],
        [4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6],
    ]
)
_SHEKEL_B = 0.1 * np.array([1, 2, 2, 4, 4, 6, 3, 7, 5, 5])


def _shekel(x, m):
    d2 = ((x[:, None] - _SHEKEL_C[:, :m]) ** 2).sum(axis=0)
    return -(1.0 / (d2 + _SHEKEL_B[:m])).sum()


def _shubert(x):
    i = np.arange(1, 6)
    s1 = (i * np.cos((i + 1) * x[0] + i)).sum()
    s2 = (i * np.cos((i + 1) * x[1] + i)).sum()
    return s1 * s2


def _six_hump_camel(x):
    x1, x2 = x
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2


def _styblinski_tang(x):
    return 0.5 * (x**4 - 16 * x**2 + 5 * x).sum()


def _trid(x):
    return ((x - 1) ** 2).sum() - (x[1:] * x[:-1]).sum()


def _zettl(x):
    x1, x2 = x
    return (x1**2 + x2**2 - 2 * x1) ** 2 + 0.25 * x1


def _bf(name, d_e, domain, f_star, x_star, ev, count=1, unsupported=()):
    return BaseFunction(
        name=name,
        d_e=d_e,
        native_domain=tuple(tuple(map(float, iv)) for iv in domain),
        f_star=float(f_star),
        x_star_native=tuple(map(float, x_star)),
        evaluator=ev,
        minimizer_count=count,
        unsupported_by=frozenset(unsupported),
    )


_CATALOG: dict[str, BaseFunction] = {
    b.name: b
    for b in [
        _bf("beale", 2, [(-4.5, 4.5)] * 2, 0.0, (3.0, 0.5), _beale),
        _bf(
            "branin",
            2,
            [(-5, 10), (0, 15)],
            0.39788735772973816,
            (math.pi, 2.275),
            _branin,
            count=3,
            unsupported=("baron",),
        ),
        _bf(
            "brent", 2, [(-10, 10)] * 2, 1.3838965267367376e-87, (-10.0, -10.0), _brent
        ),
        _bf("bukin6", 2, [(-15, -5), (-3, 3)], 0.0, (-10.0, 1.0), _bukin6,
            unsupported=("knitro",)),
        _bf("easom", 2, [(-100, 100)] * 2, -1.0, (math.pi, math.pi), _easom,
            unsupported=("baron",)),
        _bf("goldstein_price", 2, [(-2, 2)] * 2, 3.0, (0.0, -1.0), _goldstein_price),
        _bf(
            "hartmann3",
            3,
            [(0, 1)] * 3,
            -3.86277978733,
            (0.114588881225, 0.555648895474, 0.852546984217),
            _hartmann3,
        ),
        _bf(
            "hartmann6",
            6,
            [(0, 1)] * 6,
            -3.32236801142,
            (
                0.201689509094,
                0.150010693541,
                0.476873972925,
                0.275332427522,
                0.31165161724,
                0.657300534554,
            ),
            _hartmann6,
        ),
        _bf("levy", 4, [(-10, 10)] * 4, 0.0, (1.0,) * 4, _levy,
            unsupported=("baron",)),
        _bf("perm4", 4, [(-4, 4)] * 4, 0.0, (1.0, 0.5, 1 / 3, 0.25), _perm4),
        _bf("rosenbrock", 3, [(-5, 10)] * 3, 0.0, (1.0,) * 3, _rosenbrock),
        _bf(
            "shekel5",
            4,
            [(0, 10)] * 4,
            -10.1531996791,
            (4.00003715238, 4.00013327866, 4.00003715106, 4.00013327709),
            lambda x: _shekel(x, 5),
        ),
        _bf(
            "shekel7",
            4,
            [(0, 10)] * 4,
            -10.4029153368,
            (4.00057281817, 3.99960620707, 4.00057282112, 3.9996062104),
            lambda x: _shekel(x, 7),
        ),
        _bf(
            "shekel10",
            4,
            [(0, 10)] * 4,
            -10.5364431535,
            (4.00074686666, 3.99950948087, 4.000746867, 3.99950948224),
            lambda x: _shekel(x, 10),
        ),
        _bf(
            "shubert",
            2,
            [(-10, 10)] * 2,
            -186.730908831,
            (-1.42512843019, -0.800321101389),
            _shubert,
            count=18,
            unsupported=("baron",),
        ),
        _bf(
            "six_hump_camel",
            2,
            [(-3, 3), (-2, 2)],
            -1.03162845349,
            (0.0898420089353, -0.712656403019),
            _six_hump_camel,
            count=2,
        ),
        _bf(
            "styblinski_tang",
            4,
            [(-5, 5)] * 4,
            -156.66466281508565,
            (-2.903534027771177,) * 4,
            _styblinski_tang,
        ),
        _bf("trid", 5, [(-25, 25)] * 5, -30.0, (5.0, 8.0, 9.0, 8.0, 5.0), _trid),
        _bf("zettl", 2, [(-5, 5)] * 2, -0.00379123722047, (-0.0298959852079, 0.0),
            _zettl),
    ]
}


def base_names() -> list[str]:
    """The benchmark names in alphabetical order."""
    return sorted(_CATALOG)


def base_function(name: str) -> BaseFunction:
    try:
        return _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown base function {name!r}; known: {base_names()}")


def quadratic_base(d_e: int, center: Sequence[float]) -> BaseFunction:
    """A strictly convex bowl ||x - center||^2 on [-1,1]^(d_e).

    Not part of the benchmark catalog; used by the validation suite where a
    unique interior global minimizer is required.
    """
    c = np.asarray(center, dtype=float)
    if c.shape != (d_e,):
        raise ValueError("center must be a d_e-vector")
    if np.any(np.abs(c) >= 1.0):
        raise ValueError("center must be interior to [-1,1]^d_e")
    return _bf(
        "quadratic",
        d_e,
        [(-1.0, 1.0)] * d_e,
        0.0,
        tuple(c),
        lambda x, c=c: float(((x - c) ** 2).sum()),
    )


# --- scaling and lifting -----------------------------------------------------


def scale_to_unit_box(base: BaseFunction) -> BaseFunction:
    """Reparameterize onto [-1,1]^(d_e) via x_bar_i = l_i + (u_i - l_i)(x_i + 1)/2.

    The minimum value is untouched and the minimizer maps through the inverse
    affine map. The returned evaluator remains defined on all of R^(d_e),
    which matters because projections of a rotated cube overshoot the box.
    """
    lo = np.array([iv[0] for iv in base.native_domain])
    hi = np.array([iv[1] for iv in base.native_domain])
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError(f"{base.name}: cannot scale an unbounded domain")
    if np.all(lo == -1.0) and np.all(hi == 1.0):
        return base
    span = hi - lo
    inner = base.evaluator

    def scaled(x, lo=lo, span=span):
        return inner(lo + span * (x + 1.0) / 2.0)

    x_star = 2.0 * (np.asarray(base.x_star_native) - lo) / span - 1.0
    return replace(
        base,
        native_domain=((-1.0, 1.0),) * base.d_e,
        x_star_native=tuple(x_star),
        evaluator=scaled,
    )


@dataclass
class SyntheticProblem:
    """A rotated lift f(x) = g(Qx) of a scaled base function.

    Immutable payload apart from `counter`, the per-run evaluation count.
    Clone before handing to a parallel worker so counts stay per-run.
    """

    base: BaseFunction
    D: int
    Q: np.ndarray
    subspace: EffectiveSubspace
    f_star: float
    x_star: np.ndarray
    seed: int | None = None
    counter: int = 0
    _Ut: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # U^T equals the first d_e rows of Q; keep a contiguous copy for the
        # per-evaluation matvec
        self._Ut = np.ascontiguousarray(self.subspace.U.T)

    @property
    def d_e(self) -> int:
        return self.base.d_e

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def x_top_star(self) -> np.ndarray:
        """The effective-subspace component of the stored minimizer.

        The lifted minimizer has no constant-subspace component, so this is
        x_star itself.
        """
        return self.x_star

    def evaluate(self, x) -> float:
        return evaluate(self, x)

    def peek(self, x) -> float:
        """Evaluate f without counting. For calibration and bookkeeping only
        (penalty levels, anchor comparisons), never for solver queries."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.D,) or not np.all(np.isfinite(x)):
            raise ValueError("peek needs a finite D-vector")
        return float(self.base.evaluator(self._Ut @ x))

    def clone(self) -> "SyntheticProblem":
        return replace(self, counter=0)


def lift(
    base: BaseFunction,
    D: int,
    rng: SeededRng | None = None,
    rotation: np.ndarray | None = None,
    seed_label: int | None = None,
) -> SyntheticProblem:
    """Embed a base function into D dimensions behind a random rotation.

    Draws Haar-orthogonal Q until the lifted minimizer Q^T (x_bar*; 0) lies
    strictly inside [-1,1]^D, so the known minimum is attained in the box
    (the base minimum is global over R^(d_e), hence also over the rotated
    cube's projection). Pass `rotation` to pin Q, e.g. the identity for
    unrotated test problems.
    """
    scaled = scale_to_unit_box(base)
    d_e = scaled.d_e
    if D <= d_e:
        raise ValueError(f"D must exceed d_e = {d_e}, got {D}")
    padded = np.zeros(D)
    padded[:d_e] = scaled.x_star_native

    if rotation is not None:
        Q = np.asarray(rotation, dtype=float)
        if Q.shape != (D, D):
            raise ValueError(f"rotation must be {D}x{D}")
        if np.abs(Q @ Q.T - np.eye(D)).max() > 1e-10:
            raise ValueError("rotation is not orthogonal")
        x_star = Q.T @ padded
        if np.abs(x_star).max() > 1.0 + 1e-12:
            raise ValueError("lifted minimizer escapes the box under this rotation")
    else:
        if rng is None:
            raise ValueError("either rng or rotation is required")
        gen = rng.generator()
        for _ in range(64):
            Q = _haar_from_generator(D, gen)
            x_star = Q.T @ padded
            if np.abs(x_star).max() <= 1.0 - 1e-9:
                break
        else:
            raise RuntimeError(
                f"{base.name}: no rotation kept the minimizer interior after 64 draws"
            )

    return SyntheticProblem(
        base=scaled,
        D=D,
        Q=Q,
        subspace=EffectiveSubspace.from_rotation(Q, d_e),
        f_star=scaled.f_star,
        x_star=x_star,
        seed=seed_label,
    )


def evaluate(prob: SyntheticProblem, x) -> float:
    """f(x) = g_bar((Qx)_(1:d_e)). Counts exactly one evaluation."""
    x = np.asarray(x, dtype=float)
    if x.shape != (prob.D,):
        raise ValueError(f"x must be a {prob.D}-vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite evaluation point")
    prob.counter += 1
    return float(prob.base.evaluator(prob._Ut @ x))


# --- manifest ----------------------------------------------------------------


def manifest_seed(name: str, D: int, master_seed: int) -> int:
    """Stable per-(problem, D) seed derived by hashing; platform-independent."""
    h = hashlib.blake2b(f"{name}:{D}:{master_seed}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big") >> 1


def generate(name: str, D: int, seed: int) -> SyntheticProblem:
    """Rebuild a manifest problem bit-identically from (name, D, seed)."""
    return lift(base_function(name), D, rng=SeededRng(seed), seed_label=seed)


def default_manifest(dims: Sequence[int], master_seed: int) -> list[dict]:
    entries = []
    for D in dims:
        for name in base_names():
            b = _CATALOG[name]
            entries.append(
                {
                    "name": name,
                    "d_e": b.d_e,
                    "D": int(D),
                    "seed": manifest_seed(name, D, master_seed),
                    "unsupported_by": sorted(b.unsupported_by),
                }
            )
    return entries


def write_manifest(entries: list[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump({"problems": entries}, fh, indent=2)
        fh.write("\n")


def load_manifest(path) -> list[dict]:
    with open(path) as fh:
        payload = json.load(fh)
    entries = payload["problems"]
    for e in entries:
        for key in ("name", "d_e", "D", "seed"):
            if key not in e:
                raise ValueError(f"manifest entry missing {key!r}: {e}")
    return entries
