"""Seeded random matrices, effective subspaces, and the minimal-norm reduced minimizer.

Everything an embedding run needs before an objective ever gets evaluated:
reproducible Gaussian and Haar-orthogonal sampling, orthogonal projections
onto the effective/constant subspace pair (U, V), the least-norm solution
y2 of B y = z with B = U^T A, and the constant-subspace component
w = V^T A y2 that the probability bounds are written in terms of.

Randomness convention: a :class:`SeededRng` is a value, not a stateful
generator. Every sampling operation builds a fresh PCG64 generator from
(master_seed, stream_id) via numpy's SeedSequence spawn keys, so any draw is
a pure function of (dimensions, master_seed, stream_id) and runs replay
bit-identically under a pinned numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "SeededRng",
    "EffectiveSubspace",
    "Embedding",
    "DegenerateMatrixError",
    "sample_gaussian",
    "sample_haar_orthogonal",
    "project_effective",
    "minimal_norm_y",
    "compute_w",
]

_ORTHO_TOL = 1e-10
_RANK_TOL = 1e-12


class DegenerateMatrixError(ValueError):
    """Raised when a matrix that must have full row rank is rank-deficient."""


@dataclass(frozen=True)
class SeededRng:
    """Reproducible random stream identified by (master_seed, stream_id).

    Distinct stream_ids give statistically independent streams of the same
    master seed; identical pairs always reproduce the same draws.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))

    def stream(self, stream_id: int) -> "SeededRng":
        """A sibling stream of the same master seed."""
        return SeededRng(self.master_seed, stream_id)


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class EffectiveSubspace:
    """Orthonormal bases U (effective) and V (constant) of complementary subspaces.

    U is D x d_e, V is D x (D - d_e); columns of each are orthonormal and the
    two ranges are mutually orthogonal. Construction validates the residuals
    to 1e-10 in max norm.
    """

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U = _as_matrix(self.U, "U")
        V = _as_matrix(self.V, "V")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        if U.shape[0] != V.shape[0]:
            raise ValueError("U and V must share the ambient dimension")
        if U.shape[1] + V.shape[1] != U.shape[0]:
            raise ValueError("U and V must span complementary subspaces")
        for name, M in (("U", U), ("V", V)):
            resid = np.abs(M.T @ M - np.eye(M.shape[1])).max()
            if resid > _ORTHO_TOL:
                raise ValueError(f"{name} columns not orthonormal (residual {resid:.2e})")
        cross = np.abs(U.T @ V).max() if V.shape[1] else 0.0
        if cross > _ORTHO_TOL:
            raise ValueError(f"U and V not mutually orthogonal (residual {cross:.2e})")

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    @property
    def d_e(self) -> int:
        return self.U.shape[1]

    @classmethod
    def aligned(cls, dim: int, d_e: int) -> "EffectiveSubspace":
        """Coordinate-aligned subspace: U spans the first d_e axes."""
        eye = np.eye(dim)
        return cls(U=eye[:, :d_e], V=eye[:, d_e:])

    @classmethod
    def from_rotation(cls, Q: np.ndarray, d_e: int) -> "EffectiveSubspace":
        """Subspace pair spanned by the first d_e rows of an orthogonal Q."""
        Q = _as_matrix(Q, "Q")
        return cls(U=Q[:d_e].T.copy(), V=Q[d_e:].T.copy())

    def is_aligned(self, tol: float = _ORTHO_TOL) -> bool:
        eye = np.eye(self.dim)[:, : self.d_e]
        return bool(np.abs(np.abs(self.U) - eye).max() <= tol) and bool(
            np.abs(self.U - eye).max() <= tol
        )


@dataclass(frozen=True)
class Embedding:
    """A random affine subspace y -> A y + p with anchor p inside X = [-1,1]^D."""

    A: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        p = _as_vector(self.p, "p")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "p", p)
        D, d = A.shape
        if d < 1:
            raise ValueError("embedding dimension d must be >= 1")
        if D < d:
            raise ValueError("ambient dimension D must be >= d")
        if p.shape[0] != D:
            raise ValueError("anchor p must have length D")
        if np.abs(p).max() > 1 + 1e-12:
            raise ValueError("anchor p must lie in [-1, 1]^D")

    @property
    def ambient_dim(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def map(self, y: np.ndarray) -> np.ndarray:
        return self.A @ np.asarray(y, dtype=float) + self.p


def sample_gaussian(rows: int, cols: int, rng: SeededRng) -> np.ndarray:
    """An i.i.d. standard normal matrix, reproducible from the seed pair."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    return rng.generator().standard_normal((rows, cols))


def sample_haar_orthogonal(n: int, rng: SeededRng) -> np.ndarray:
    """A Haar-distributed orthogonal matrix.

    QR of a Gaussian matrix alone is not Haar; multiplying each column of Q
    by the sign of the corresponding R diagonal entry fixes the distribution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return _haar_from_generator(n, rng.generator())


def _haar_from_generator(n: int, gen: np.random.Generator) -> np.ndarray:
    G = gen.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def project_effective(sub: EffectiveSubspace, x: np.ndarray):
    """Split x into its effective and constant components (x_top, x_perp)."""
    x = _as_vector(x, "x")
    if x.shape[0] != sub.dim:
        raise ValueError(f"x has length {x.shape[0]}, subspace expects {sub.dim}")
    x_top = sub.U @ (sub.U.T @ x)
    x_perp = sub.V @ (sub.V.T @ x)
    return x_top, x_perp


def minimal_norm_y(B: np.ndarray, z_star: np.ndarray) -> np.ndarray:
    """Least-Euclidean-norm solution y2 of B y = z_star for a wide full-row-rank B.

    Computed through the reduced QR of B^T (never by forming an inverse):
    with B^T = Q R, the minimum-norm solution is Q R^{-T} z_star, which lies
    in range(B^T) and therefore has no null-space component.
    """
    B = _as_matrix(B, "B")
    z_star = _as_vector(z_star, "z_star")
    d_e, d = B.shape
    if z_star.shape[0] != d_e:
        raise ValueError("z_star length must equal the row count of B")
    if d < d_e:
        raise DegenerateMatrixError(
            f"B is {d_e}x{d}; an underdetermined system needs d >= d_e"
        )
    Q, R = np.linalg.qr(B.T)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= _RANK_TOL * max(diag.max(), 1e-300):
        raise DegenerateMatrixError(
            "B is rank-deficient within tolerance 1e-12; the minimal-norm "
            "solution is not defined"
        )
    u = solve_triangular(R.T, z_star, lower=True)
    return Q @ u


def compute_w(sub: EffectiveSubspace, A: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Constant-subspace coordinates w = V^T A y2 of the embedded candidate."""
    A = _as_matrix(A, "A")
    y2 = _as_vector(y2, "y2")
    if A.shape[0] != sub.dim:
        raise ValueError("A row count must match the subspace ambient dimension")
    if A.shape[1] != y2.shape[0]:
        raise ValueError("y2 length must match the column count of A")
    return sub.V.T @ (A @ y2)
