"""Smallest generalized eigenpairs of a symmetric positive definite pencil.

The production path is block shift-invert subspace iteration at shift 0 with
full reorthogonalization in the M-inner product and a Rayleigh-Ritz projection
each sweep; the validation path is a dense reduction to standard form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FactorizationFailure, NotConverged, TooLarge

DENSE_ORDER_GUARD = 2000


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with M-orthonormal vectors and residual norms."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    mass_gram: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __len__(self):
        return len(self.values)


def _unpack(pencil, mass):
    if mass is not None:
        return pencil, mass
    return pencil.K, pencil.M


def _as_csc(a):
    if sp.issparse(a):
        return a.tocsc()
    return sp.csc_matrix(np.asarray(a, dtype=float))


def _factor_spd(K):
    """LU with diagonal pivoting; positive pivots certify positive definiteness."""
    try:
        lu = spla.splu(_as_csc(K), permc_spec="MMD_AT_PLUS_A",
                       diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise FactorizationFailure(f"sparse factorization failed: {exc}") from exc
    if np.any(lu.U.diagonal() <= 0.0):
        raise FactorizationFailure("non-positive pivot: stiffness matrix is not SPD")
    return lu

def _m_orthonormalize(X, M, rng):
    """Orthonormalize the columns of X in the M-inner product.

    Rank-deficient directions are replaced by fresh random vectors; a dense
    eigendecomposition of the small Gram matrix keeps this robust near
    convergence, when Cholesky of the Gram matrix can fail.
    """
    n, p = X.shape
    for _ in range(3):
        G = X.T @ (M @ X)
        G = 0.5 * (G + G.T)
        try:
            L = la.cholesky(G, lower=True)
            return la.solve_triangular(L, X.T, lower=True).T
        except la.LinAlgError:
            w, V = la.eigh(G)
            keep = w > max(w[-1], 0.0) * 1e-14
            Y = (X @ V[:, keep]) / np.sqrt(w[keep])
            deficit = p - Y.shape[1]
            X = np.hstack([Y, rng.standard_normal((n, deficit))])
    raise FactorizationFailure("M-orthonormalization failed: mass matrix not SPD?")


def smallest_eigenpairs(pencil, k: int, tol: float = 1e-10, max_iter: int = 500,
                        M=None, block: int = 4, seed: int = 20240) -> Spectrum:
    """Return the k smallest eigenpairs of K x = lambda M x.

    Accepts a Pencil or an explicit (K, M) pair via the M keyword.  The block
    size pads the iterated subspace so clusters up to that multiplicity are
    resolved; the start block is seeded for reproducibility.  A pair counts as
    converged when ||K x - lambda M x||_2 <= tol * max(1, lambda) * ||x||_M.
    """
    K, M = _unpack(pencil, M)
    K = sp.csr_matrix(_as_csc(K))
    M = sp.csr_matrix(_as_csc(M))
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}, got {k}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    lu = _factor_spd(K)
    p = min(n, k + max(block, 2))
    rng = np.random.default_rng(seed)
    X = _m_orthonormalize(rng.standard_normal((n, p)), M, rng)
    values = residuals = None
    for it in range(1, max_iter + 1):
        Y = lu.solve(M @ X)
        Y = _m_orthonormalize(Y, M, rng)
        A = Y.T @ (K @ Y)
        A = 0.5 * (A + A.T)
        theta, S = la.eigh(A)
        X = Y @ S
        R = K @ X[:, :k] - (M @ X[:, :k]) * theta[:k]
        residuals = np.linalg.norm(R, axis=0)
        values = theta
        if np.all(residuals <= tol * np.maximum(1.0, theta[:k])):
            gram = X[:, :k].T @ (M @ X[:, :k])
            return Spectrum(theta[:k].copy(), X[:, :k].copy(), residuals,
                            gram, converged=True, iterations=it)
    gram = X[:, :k].T @ (M @ X[:, :k])
    partial = Spectrum(values[:k].copy(), X[:, :k].copy(), residuals, gram,
                       converged=False, iterations=max_iter)
    raise NotConverged(f"no convergence in {max_iter} iterations "
                       f"(max residual {residuals.max():.3e})",
                       partial=partial, iterations=max_iter)


def dense_oracle(pencil, M=None) -> Spectrum:
    """Full eigendecomposition through dense reduction to standard form.

    Independent of the iterative path: LAPACK reduces the pair with a dense
    Cholesky factorization of M.  Guarded to small orders.
    """
    K, M = _unpack(pencil, M)
    K = np.asarray(K.todense() if sp.issparse(K) else K, dtype=float)
    M = np.asarray(M.todense() if sp.issparse(M) else M, dtype=float)
    n = K.shape[0]
    if n > DENSE_ORDER_GUARD:
        raise TooLarge(f"order {n} exceeds dense oracle guard {DENSE_ORDER_GUARD}")
    values, vectors = la.eigh(K, M)
    R = K @ vectors - (M @ vectors) * values
    residuals = np.linalg.norm(R, axis=0)
    gram = vectors.T @ M @ vectors
    return Spectrum(values, vectors, residuals, gram)
