"""Cross-sections, schedules, and tensor meshes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinspectra.errors import (BadDimension, DegenerateCell, NonInteriorOrigin,
                                RegimeViolation)
from thinspectra.geometry import (Geometry, Grading, Interval, MeshLevels, Rect,
                                  Regime, grading_for, make_geometry, make_mesh,
                                  make_schedule, origin_base_width)


def test_interval_measure_unit():
    assert make_geometry(2, Interval(-1.0, 1.0)).measure == 2.0


def test_interval_measure_asymmetric():
    assert make_geometry(2, Interval(-1.0, 2.0)).measure == 3.0


def test_rect_measure():
    assert make_geometry(3, Rect(0.5, 0.5)).measure == 1.0


def test_geometry_rejects_noninterior_origin():
    with pytest.raises(NonInteriorOrigin):
        make_geometry(2, Interval(0.5, 2.0))
    with pytest.raises(NonInteriorOrigin):
        make_geometry(3, Rect(-0.5, 0.5))


def test_geometry_rejects_bad_dimension():
    with pytest.raises(BadDimension):
        make_geometry(4, Rect(0.5, 0.5))
    with pytest.raises(BadDimension):
        make_geometry(3, Interval(-1.0, 1.0))


# -- schedules --------------------------------------------------------------

def test_schedule_finite_pair():
    g = make_geometry(2, Interval(-1.0, 1.0))
    sched = make_schedule(Regime.finite(1.0), g, 0.5, 0.5, 2)
    p = sched.pairs[1]
    assert (p.r, p.h) == (0.125, 0.125)


def test_schedule_zero_ratio_decreasing():
    g = make_geometry(2, Interval(-1.0, 1.0))
    sched = make_schedule(Regime.zero(), g, 0.5, 0.5, 2)
    p = sched.pairs[1]
    assert p.h == pytest.approx(1.0 / 64.0)
    ratios = [q.volume_ratio(2) for q in sched.pairs]
    assert ratios[1] == pytest.approx(0.125)
    assert ratios == sorted(ratios, reverse=True)


def test_schedule_infinite_dim3_window():
    g = make_geometry(3, Rect(0.5, 0.5))
    r0, rho = math.exp(-4.0) / 0.5, 0.5
    sched = make_schedule(Regime.infinite(), g, r0, rho, 1)
    p = sched.pairs[0]
    assert p.r == pytest.approx(math.exp(-4.0))
    assert p.h == pytest.approx(2.0 * p.r**2)
    assert p.r**2 < p.h < -p.r**2 * math.log(p.r)


def test_schedule_infinite_dim3_rejects_empty_window():
    g = make_geometry(3, Rect(0.5, 0.5))
    with pytest.raises(RegimeViolation):
        make_schedule(Regime.infinite(), g, 0.9, 0.9, 1)


def test_schedule_validates_inputs():
    g = make_geometry(2, Interval(-1.0, 1.0))
    with pytest.raises(RegimeViolation):
        make_schedule(Regime.finite(1.0), g, 1.5, 0.5, 2)
    with pytest.raises(RegimeViolation):
        make_schedule(Regime.finite(1.0), g, 0.5, 0.5, 0)
    with pytest.raises(RegimeViolation):
        Regime.finite(-2.0)


@settings(max_examples=40, deadline=None)
@given(r0=st.floats(0.05, 0.9), rho=st.floats(0.2, 0.9), count=st.integers(1, 6),
       kind=st.sampled_from(["finite", "zero", "infinite"]),
       dim=st.sampled_from([2, 3]))
def test_schedule_ratio_monotone_toward_target(r0, rho, count, kind, dim):
    """The regime-defining ratio h/r^(N-1) marches monotonically to its target."""
    g = make_geometry(2, Interval(-1.0, 1.0)) if dim == 2 else make_geometry(3, Rect(0.5, 0.5))
    regime = {"finite": Regime.finite(2.0), "zero": Regime.zero(),
              "infinite": Regime.infinite()}[kind]
    try:
        sched = make_schedule(regime, g, r0, rho, count)
    except RegimeViolation:
        assert kind == "infinite" and dim == 3
        return
    ratios = [p.volume_ratio(dim) for p in sched.pairs]
    if kind == "finite":
        assert all(math.isclose(x, 2.0, rel_tol=1e-12) for x in ratios)
    elif kind == "zero":
        assert ratios == sorted(ratios, reverse=True)
    else:
        assert ratios == sorted(ratios)


# -- meshes -----------------------------------------------------------------

def test_mesh_node_and_cell_counts():
    g = make_geometry(2, Interval(-1.0, 1.0))
    mesh = make_mesh(g, MeshLevels(4, 4, 2))
    assert (mesh.n_a, len(mesh.a_cells)) == (25, 16)
    assert (mesh.n_b, len(mesh.b_cells)) == (15, 8)


def test_dirichlet_top_is_whole_top_face():
    g = make_geometry(2, Interval(-1.0, 1.0))
    mesh = make_mesh(g, MeshLevels(4, 4, 2))
    nodes = mesh.a_nodes
    assert np.all(nodes[mesh.dirichlet_top, -1] == 1.0)
    assert len(mesh.dirichlet_top) == 5


def test_grading_smallest_cell():
    g = make_geometry(2, Interval(-1.0, 1.0))
    mesh = make_mesh(g, MeshLevels(8, 2, 2), Grading(3, 0.5))
    # base width 1/4 per side, three geometric splits
    widths = np.diff(mesh.b_cross[0])
    assert widths.min() == pytest.approx(1.0 / 32.0)


def test_grading_for_targets_width():
    assert grading_for(0.25, 0.25).origin_cells == 0
    assert grading_for(0.25, 0.03).origin_cells == 4  # 0.25/16 < 0.03 < 0.25/8


def test_degenerate_cell_raises():
    g = make_geometry(2, Interval(-1.0, 1.0))
    with pytest.raises(DegenerateCell):
        make_mesh(g, MeshLevels(4, 4, 4), Grading(50, 0.5))


def test_mesh_volumes_sum():
    g = make_geometry(3, Rect(0.4, 0.7))
    mesh = make_mesh(g, MeshLevels(3, 2, 2), Grading(2, 0.5))
    total = mesh.part_volume("a") + mesh.part_volume("b")
    assert total == pytest.approx(2.0 * g.measure, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-3.0, -0.2), d=st.floats(0.2, 3.0), m=st.integers(2, 9),
       r=st.floats(0.01, 0.99))
def test_junction_images_inside_cross_section(c, d, m, r):
    """r*x' stays in the closure of the cross-section for every rod node."""
    g = make_geometry(2, Interval(c, d))
    mesh = make_mesh(g, MeshLevels(m, 2, 2))
    xs = mesh.a_nodes[mesh.junction_a, 0]
    lo, hi = mesh.b_cross[0][0], mesh.b_cross[0][-1]
    assert np.all(r * xs >= lo - 1e-15) and np.all(r * xs <= hi + 1e-15)


def test_mesh_export_lists_every_node_and_cell():
    g = make_geometry(2, Interval(-1.0, 1.0))
    mesh = make_mesh(g, MeshLevels(2, 2, 2))
    text = mesh.export_text()
    lines = text.strip().splitlines()
    assert sum(l.startswith("node") for l in lines) == mesh.n_nodes
    assert sum(l.startswith("cell") for l in lines) == len(mesh.a_cells) + len(mesh.b_cells)


def test_origin_base_width():
    g = make_geometry(2, Interval(-1.0, 2.0))
    # 4 cells split 1 + 3: left base 1.0, right base 1.0
    assert origin_base_width(g, 4) == pytest.approx(1.0)
