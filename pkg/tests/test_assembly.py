"""Constraints and the discrete pencil."""

import math

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st

from thinspectra.assembly import (assemble_pencil, assemble_raw,
                                  build_constraints)
from thinspectra.eigensolve import dense_oracle, smallest_eigenpairs
from thinspectra.errors import PointLocationFailure, SingularMass
from thinspectra.geometry import (Grading, Interval, Mesh, MeshLevels, Rect,
                                  ThinParams, make_geometry, make_mesh)


@pytest.fixture(scope="module")
def interval_geometry():
    return make_geometry(2, Interval(-1.0, 1.0))


@pytest.fixture(scope="module")
def coarse_mesh(interval_geometry):
    return make_mesh(interval_geometry, MeshLevels(4, 4, 2))


def test_tie_at_origin_node_is_identity(coarse_mesh):
    cons = build_constraints(coarse_mesh, 0.25)
    mid = [t for t in cons.ties
           if coarse_mesh.a_nodes[t.slave, 0] == 0.0]
    assert len(mid) == 1
    assert len(mid[0].masters) == 1 and mid[0].weights[0] == 1.0


def test_tie_brackets_scaled_point(coarse_mesh):
    """Rod node at x'=0.5 with r=0.25 interpolates the slab surface at 0.125."""
    cons = build_constraints(coarse_mesh, 0.25)
    tie = next(t for t in cons.ties if coarse_mesh.a_nodes[t.slave, 0] == 0.5)
    xs = np.array([coarse_mesh.b_nodes[m - coarse_mesh.n_a, 0] for m in tie.masters])
    assert sorted(xs) == [0.0, 0.5]
    assert tie.weights.sum() == pytest.approx(1.0)
    assert np.dot(tie.weights, xs) == pytest.approx(0.125)


def test_constant_surface_gives_unit_slaves(coarse_mesh):
    cons = build_constraints(coarse_mesh, 0.7)
    surface_ones = np.ones(coarse_mesh.n_nodes)
    for t in cons.ties:
        assert np.dot(t.weights, surface_ones[t.masters]) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.01, 0.99), m=st.integers(2, 8), oc=st.integers(0, 3))
def test_tie_weights_partition_of_unity(r, m, oc):
    g = make_geometry(2, Interval(-1.0, 2.0))
    mesh = make_mesh(g, MeshLevels(m, 2, 2), Grading(oc, 0.5))
    for t in build_constraints(mesh, r).ties:
        assert t.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert t.slave not in set(int(x) for x in t.masters)


def test_point_location_failure_outside_surface(interval_geometry):
    mesh = make_mesh(interval_geometry, MeshLevels(4, 2, 2))
    shrunk = Mesh(mesh.dim, mesh.geometry, mesh.a_cross, mesh.a_axial,
                  (np.linspace(-0.5, 0.5, 5),), mesh.b_axial, mesh.grading)
    with pytest.raises(PointLocationFailure):
        build_constraints(shrunk, 0.9)


def test_dirichlet_slave_overlap_rejected(coarse_mesh):
    from thinspectra.assembly import ConstraintSet, Tie, elimination_matrix
    bad = ConstraintSet(np.array([0]), (Tie(0, np.array([30]), np.array([1.0])),))
    with pytest.raises(SingularMass):
        elimination_matrix(coarse_mesh, bad)


def test_stiffness_annihilates_constants(coarse_mesh):
    stiff, _ = assemble_raw(coarse_mesh, ThinParams(0.25, 0.25))
    ones = np.ones(coarse_mesh.n_nodes)
    assert np.abs(stiff @ ones).max() <= 1e-12


def test_total_weighted_mass(coarse_mesh):
    """q=1 (h=r) gives total mass |rod part| + (h/r)|slab part| = 4."""
    _, mass = assemble_raw(coarse_mesh, ThinParams(0.25, 0.25))
    ones = np.ones(coarse_mesh.n_nodes)
    assert ones @ (mass @ ones) == pytest.approx(4.0, abs=1e-12)


def _pencil(geometry, levels, r, h, grading=Grading()):
    mesh = make_mesh(geometry, levels, grading)
    return assemble_pencil(mesh, ThinParams(r, h), build_constraints(mesh, r))


def test_smallest_eigenvalue_matches_dense_oracle(interval_geometry):
    pencil = _pencil(interval_geometry, MeshLevels(2, 2, 2), 0.25, 0.25)
    iterative = smallest_eigenpairs(pencil, 1)
    oracle = dense_oracle(pencil)
    assert iterative.values[0] == pytest.approx(oracle.values[0], abs=1e-10)


def test_pencil_exactly_symmetric(interval_geometry):
    pencil = _pencil(interval_geometry, MeshLevels(4, 4, 4), 0.3, 0.2)
    assert abs(pencil.K - pencil.K.T).max() == 0.0
    assert abs(pencil.M - pencil.M.T).max() == 0.0


def test_pencil_positive_definite_with_positive_pivots(interval_geometry):
    pencil = _pencil(interval_geometry, MeshLevels(4, 4, 4), 0.3, 0.2)
    for mat in (pencil.K, pencil.M):
        la.cholesky(mat.toarray())  # raises if any pivot fails


def test_eigenvalues_invariant_under_common_scaling(interval_geometry):
    pencil = _pencil(interval_geometry, MeshLevels(3, 3, 3), 0.25, 0.25)
    base = dense_oracle(pencil).values
    scaled = dense_oracle((7.3 * pencil.K).tocsr(), M=(7.3 * pencil.M).tocsr()).values
    assert np.abs(base - scaled).max() <= 1e-10 * max(1.0, np.abs(base).max())


@pytest.mark.parametrize("dim_fixture", ["interval", "rect"])
def test_eigenvalues_decrease_under_refinement(dim_fixture):
    """Discrete values relax monotonically as the mesh refines at fixed (r, h)."""
    if dim_fixture == "interval":
        g = make_geometry(2, Interval(-1.0, 1.0))
        levels = [MeshLevels(m, m, m) for m in (4, 8, 16)]
    else:
        g = make_geometry(3, Rect(0.5, 0.5))
        levels = [MeshLevels(m, m, m) for m in (2, 4, 6)]
    runs = [dense_oracle(_pencil(g, lv, 0.25, 0.25)).values[:3] for lv in levels]
    for coarse, fine in zip(runs, runs[1:]):
        assert np.all(fine <= coarse + 1e-12)


def test_pencil_export_coordinate_format(interval_geometry):
    pencil = _pencil(interval_geometry, MeshLevels(2, 2, 2), 0.25, 0.25)
    lines = pencil.export_coo("K").strip().splitlines()
    assert len(lines) == pencil.K.nnz
    row, col, value = lines[0].split()
    int(row), int(col), float(value)


def test_dim3_assembly_mass(interval_geometry):
    g = make_geometry(3, Rect(0.5, 0.5))
    mesh = make_mesh(g, MeshLevels(2, 2, 2))
    params = ThinParams(0.25, 0.0625)  # q = h/r^2 = 1
    _, mass = assemble_raw(mesh, params)
    ones = np.ones(mesh.n_nodes)
    assert ones @ (mass @ ones) == pytest.approx(2.0 * g.measure, abs=1e-12)
