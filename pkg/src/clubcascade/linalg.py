"""Dense symmetric linear algebra used throughout the package.

Everything works on plain ``numpy`` arrays. Symmetric matrices are stored in
full; factorizations are lower-triangular Cholesky factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

MAX_EIG_ITER = 10_000
MAX_SVD_ITER = 100_000


class LinalgError(ArithmeticError):
    pass


class NotPositiveDefinite(LinalgError):
    pass


class DimensionMismatch(LinalgError, ValueError):
    pass


class NoConvergence(LinalgError):
    pass


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor ``lower`` with ``lower @ lower.T == M``."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        z = solve_triangular(self.lower, rhs, lower=True, check_finite=False)
        return solve_triangular(self.lower, z, lower=True, trans="T", check_finite=False)

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def _square(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {M.shape}")
    return M


def cholesky(M: np.ndarray) -> CholeskyFactor:
    """Factor an SPD matrix.

    A pivot (squared diagonal of the factor) at or below
    ``1e-12 * trace(M) / dim`` is treated as loss of definiteness.
    """
    M = _square(M)
    n = M.shape[0]
    floor = 1e-12 * np.trace(M) / n
    try:
        lower = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    pivots = np.diag(lower) ** 2
    if not np.all(pivots > floor) or not np.isfinite(lower).all():
        raise NotPositiveDefinite(f"pivot {pivots.min():.3e} below floor {floor:.3e}")
    return CholeskyFactor(lower)


def ridge_estimate(S: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """Solve ``(lam * I + S) theta = b``."""
    S = _square(S)
    b = np.asarray(b, dtype=float)
    if b.shape != (S.shape[0],):
        raise DimensionMismatch(f"S is {S.shape} but b is {b.shape}")
    if not lam > 0:
        raise ValueError("lam must be positive")
    A = S + lam * np.eye(S.shape[0])
    return cholesky(A).solve(b)


def quad_form_inv(chol: CholeskyFactor, x: np.ndarray) -> np.ndarray | float:
    """``x^T M^{-1} x`` for a factored ``M``.

    ``x`` may be a single vector or a stack of row vectors, in which case one
    value per row is returned.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != chol.dim or x.ndim > 2:
        raise DimensionMismatch(f"factor has dim {chol.dim} but x has shape {x.shape}")
    z = solve_triangular(chol.lower, x.T, lower=True, check_finite=False)
    out = np.einsum("i...,i...->...", z, z)
    return float(out) if x.ndim == 1 else out


def gershgorin_lower(M: np.ndarray) -> float:
    M = _square(M)
    radii = np.abs(M).sum(axis=1) - np.abs(np.diag(M))
    return float(np.min(np.diag(M) - radii))


def min_eigenvalue(M: np.ndarray, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of a symmetric matrix by shifted inverse iteration.

    The shift sits strictly below the Gershgorin lower bound so that
    ``M - shift * I`` is positive definite and can be Cholesky-factored once.
    Iteration stops when the eigen-residual ``||M v - r v||`` drops below
    ``tol`` (scaled by the matrix magnitude).
    """
    M = _square(M)
    n = M.shape[0]
    if n == 1:
        return float(M[0, 0])
    scale = max(np.abs(M).max(), 1e-300)
    gap = max(1e-6 * scale, tol)
    shift = gershgorin_lower(M) - gap
    chol = cholesky(M - shift * np.eye(n))

    v = np.random.default_rng(12345).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(MAX_EIG_ITER):
        w = chol.solve(v)
        v = w / np.linalg.norm(w)
        Mv = M @ v
        rayleigh = float(v @ Mv)
        if np.linalg.norm(Mv - rayleigh * v) <= tol * max(1.0, scale):
            return rayleigh
    raise NoConvergence(f"inverse iteration did not converge in {MAX_EIG_ITER} steps")


def _orthonormal(A: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(A)
    return q


def truncated_svd(A: np.ndarray, d: int, tol: float = 1e-10, seed: int = 0):
    """Top-``d`` singular triplets by block power iteration.

    Returns ``(left, singulars, right)`` with shapes ``(n, d)``, ``(d,)`` and
    ``(m, d)``. A few oversampling columns speed up convergence; after each
    sweep a Rayleigh-Ritz step rotates the block onto singular directions.

    Iteration stops when the sine of the largest principal angle between
    successive top-``d`` right subspaces is below ``tol``, or when every
    triplet has residual below ``tol * s_1`` (the subspace itself is not
    unique when ``s_d == s_{d+1}``).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch("A must be a matrix")
    n, m = A.shape
    if not 1 <= d <= min(n, m):
        raise DimensionMismatch(f"d={d} must be in [1, {min(n, m)}]")
    block = min(d + 5, min(n, m))
    rng = np.random.default_rng(seed)
    V = _orthonormal(rng.standard_normal((m, block)))
    exact = block == min(n, m)

    prev = None
    for _ in range(MAX_SVD_ITER):
        Q = _orthonormal(A @ V)
        u_small, s, vt = np.linalg.svd(Q.T @ A, full_matrices=False)
        V = vt.T
        top = V[:, :d]
        left = Q @ u_small[:, :d]
        if exact or s[0] == 0.0:
            return left, s[:d].copy(), top.copy()
        if prev is not None:
            sine = np.linalg.norm(top - prev @ (prev.T @ top), 2)
            res_right = np.linalg.norm(A @ top - left * s[:d], axis=0)
            res_left = np.linalg.norm(A.T @ left - top * s[:d], axis=0)
            if sine < tol or max(res_right.max(), res_left.max()) <= tol * s[0]:
                return left, s[:d].copy(), top.copy()
        prev = top
    raise NoConvergence(f"block power iteration did not converge in {MAX_SVD_ITER} sweeps")
