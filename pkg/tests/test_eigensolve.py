"""Iterative solver against the dense oracle."""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from thinspectra.assembly import assemble_pencil, build_constraints
from thinspectra.eigensolve import dense_oracle, smallest_eigenpairs
from thinspectra.errors import FactorizationFailure, NotConverged, TooLarge
from thinspectra.geometry import (Interval, MeshLevels, ThinParams,
                                  make_geometry, make_mesh)
from thinspectra.study import minmax_bound


def _random_spd_pair(n, seed=7):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    K = sp.csr_matrix(a @ a.T + n * np.eye(n))
    b = rng.standard_normal((n, n)) * 0.3
    M = sp.csr_matrix(b @ b.T + np.eye(n))
    return K, M


@pytest.fixture(scope="module")
def coarse_pencil():
    g = make_geometry(2, Interval(-1.0, 1.0))
    mesh = make_mesh(g, MeshLevels(4, 4, 4))
    return assemble_pencil(mesh, ThinParams(0.25, 0.25), build_constraints(mesh, 0.25))


def test_diagonal_pencil():
    spec = smallest_eigenpairs(sp.diags([1.0, 2.0, 5.0]).tocsr(), 2,
                               M=sp.eye(3, format="csr"))
    assert spec.values == pytest.approx([1.0, 2.0])


def test_matches_oracle_on_coarse_pencil(coarse_pencil):
    it = smallest_eigenpairs(coarse_pencil, 4)
    orc = dense_oracle(coarse_pencil)
    assert np.abs(it.values - orc.values[:4]).max() <= 1e-8 * orc.values[:4].max()


def test_eigenvalue_upper_bound(coarse_pencil):
    spec = smallest_eigenpairs(coarse_pencil, 3)
    for k, lam in enumerate(spec.values, start=1):
        assert lam <= 2.0**k * k * k * math.pi**2
    assert minmax_bound(1) == pytest.approx(2.0 * math.pi**2)


def test_oracle_identity_pencil():
    K = sp.eye(6, format="csr")
    spec = dense_oracle(K, M=K.copy())
    assert spec.values == pytest.approx(np.ones(6))


def test_oracle_two_by_two():
    K = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    spec = dense_oracle(K, M=sp.eye(2, format="csr"))
    assert spec.values == pytest.approx([1.0, 3.0])


def test_random_pair_cross_check():
    K, M = _random_spd_pair(50)
    it = smallest_eigenpairs(K, 5, M=M)
    orc = dense_oracle(K, M=M)
    assert np.abs(it.values - orc.values[:5]).max() <= 1e-8 * orc.values[:5].max()


def test_oracle_order_guard():
    K = sp.eye(2001, format="csr")
    with pytest.raises(TooLarge):
        dense_oracle(K, M=K.copy())


def test_indefinite_stiffness_rejected():
    K = sp.diags([-1.0, 1.0, 2.0]).tocsr()
    with pytest.raises(FactorizationFailure):
        smallest_eigenpairs(K, 1, M=sp.eye(3, format="csr"))


def test_not_converged_carries_partial_results():
    K, M = _random_spd_pair(40, seed=3)
    with pytest.raises(NotConverged) as info:
        smallest_eigenpairs(K, 3, M=M, max_iter=1, tol=1e-14)
    partial = info.value.partial
    assert partial is not None and not partial.converged
    assert len(partial.values) == 3


def test_m_orthonormality_and_residuals(coarse_pencil):
    spec = smallest_eigenpairs(coarse_pencil, 4, tol=1e-10)
    assert np.abs(spec.mass_gram - np.eye(4)).max() <= 1e-8
    assert np.all(spec.residuals <= 1e-10 * np.maximum(1.0, spec.values))


def test_rayleigh_consistency(coarse_pencil):
    spec = smallest_eigenpairs(coarse_pencil, 4)
    for lam, x in zip(spec.values, spec.vectors.T):
        rq = (x @ (coarse_pencil.K @ x)) / (x @ (coarse_pencil.M @ x))
        assert abs(lam - rq) <= 1e-8 * max(1.0, lam)


def test_monotone_exhaustion(coarse_pencil):
    a = smallest_eigenpairs(coarse_pencil, 3)
    b = smallest_eigenpairs(coarse_pencil, 4)
    assert np.abs(a.values - b.values[:3]).max() <= 1e-10


def test_minmax_principle_on_small_system():
    """Oracle values realize the min-max over subspaces: the span of the first
    k eigenvectors attains lambda_k, every random k-subspace dominates it."""
    import scipy.linalg as la

    K, M = _random_spd_pair(8, seed=11)
    orc = dense_oracle(K, M=M)
    Kd, Md = K.toarray(), M.toarray()
    rng = np.random.default_rng(5)

    def max_rayleigh(S):
        return la.eigh(S.T @ Kd @ S, S.T @ Md @ S, eigvals_only=True).max()

    for k in range(1, 6):
        assert max_rayleigh(orc.vectors[:, :k]) == pytest.approx(orc.values[k - 1],
                                                                 rel=1e-10)
        for _ in range(25):
            assert max_rayleigh(rng.standard_normal((8, k))) >= orc.values[k - 1] - 1e-10
