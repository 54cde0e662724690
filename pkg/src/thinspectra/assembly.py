"""Assembly of the discrete stiffness/mass pencil with junction constraints.

The bilinear forms carry the thin-parameter weights: the rod part penalizes
cross gradients by 1/r^2, the slab part is weighted by the volume ratio
h/r^(N-1) and penalizes axial gradients by 1/h^2.  The junction tie slaves
every rod node on the interface to the interpolated slab surface trace at the
shrunk point r*x'.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import PointLocationFailure, SingularMass
from .geometry import Mesh, ThinParams

_LOCATE_TOL = 1e-12
_WEIGHT_DROP = 1e-14

# 1D reference matrices on [0, 1], integrated with 2-point Gauss quadrature
# (exact: the integrands are polynomials of degree <= 2).
_G_PTS = (0.5 * (1.0 - 1.0 / np.sqrt(3.0)), 0.5 * (1.0 + 1.0 / np.sqrt(3.0)))
_G_WTS = (0.5, 0.5)


def _reference_1d():
    mass = np.zeros((2, 2))
    stiff = np.zeros((2, 2))
    for t, w in zip(_G_PTS, _G_WTS):
        phi = np.array([1.0 - t, t])
        dphi = np.array([-1.0, 1.0])
        mass += w * np.outer(phi, phi)
        stiff += w * np.outer(dphi, dphi)
    return mass, stiff


_M1, _K1 = _reference_1d()


@dataclass(frozen=True)
class Tie:
    """One junction constraint: slave = sum(weights * masters)."""

    slave: int
    masters: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class ConstraintSet:
    dirichlet: np.ndarray
    ties: tuple[Tie, ...]


def _interp_1d(grid: np.ndarray, x: float) -> tuple[list[int], list[float]]:
    """Locate x in a sorted 1D grid, return node indices and linear weights."""
    lo, hi = grid[0], grid[-1]
    span = hi - lo
    if x < lo - _LOCATE_TOL * span or x > hi + _LOCATE_TOL * span:
        raise PointLocationFailure(f"point {x} outside grid [{lo}, {hi}]")
    x = min(max(x, lo), hi)
    i = int(np.searchsorted(grid, x, side="right") - 1)
    i = min(max(i, 0), len(grid) - 2)
    t = (x - grid[i]) / (grid[i + 1] - grid[i])
    return [i, i + 1], [1.0 - t, t]


def build_constraints(mesh: Mesh, r: float) -> ConstraintSet:
    """Dirichlet set plus junction ties slaving rod nodes to slab surface traces.

    For a rod interface node at cross coordinate x', the slave value is the
    piecewise-(bi)linear interpolation of the slab surface at r*x'; the
    interpolation weights sum to 1 by construction.
    """
    dirichlet = np.unique(np.concatenate([mesh.dirichlet_top, mesh.dirichlet_lateral_b]))
    surface = mesh.junction_b_surface.reshape([len(g) for g in mesh.b_cross])
    a_shape = mesh.a_shape
    a_ids = np.arange(mesh.n_a).reshape(a_shape)
    ties = []
    for cross_index in np.ndindex(*a_shape[:-1]):
        slave = int(a_ids[cross_index + (0,)])
        point = [mesh.a_cross[axis][i] * r for axis, i in enumerate(cross_index)]
        idx_w = [_interp_1d(mesh.b_cross[axis], x) for axis, x in enumerate(point)]
        masters, weights = [], []
        for combo in np.ndindex(*(2,) * len(point)):
            w = 1.0
            pos = []
            for axis, pick in enumerate(combo):
                ids, ws = idx_w[axis]
                w *= ws[pick]
                pos.append(ids[pick])
            if w > _WEIGHT_DROP:
                masters.append(int(surface[tuple(pos)]))
                weights.append(w)
        ties.append(Tie(slave, np.asarray(masters), np.asarray(weights)))
    return ConstraintSet(dirichlet, tuple(ties))


def _cell_blocks(grid: np.ndarray):
    """Per-cell 1D mass and stiffness blocks, shapes (n_cells, 2, 2)."""
    widths = np.diff(grid)
    return (widths[:, None, None] * _M1, (1.0 / widths)[:, None, None] * _K1)


def _part_matrices_2d(cross, axial, w_mass, w_cross, w_axial):
    mx, kx = _cell_blocks(cross[0])
    mz, kz = _cell_blocks(axial)
    mass = np.einsum("iab,jcd->ijacbd", mx, mz)
    stiff = (w_cross * np.einsum("iab,jcd->ijacbd", kx, mz)
             + w_axial * np.einsum("iab,jcd->ijacbd", mx, kz))
    n = mx.shape[0] * mz.shape[0]
    return w_mass * mass.reshape(n, 4, 4), stiff.reshape(n, 4, 4)


def _part_matrices_3d(cross, axial, w_mass, w_cross, w_axial):
    mx, kx = _cell_blocks(cross[0])
    my, ky = _cell_blocks(cross[1])
    mz, kz = _cell_blocks(axial)
    def tri(a, b, c):
        return np.einsum("iab,jcd,kef->ijkacebdf", a, b, c)
    mass = tri(mx, my, mz)
    stiff = (w_cross * (tri(kx, my, mz) + tri(mx, ky, mz))
             + w_axial * tri(mx, my, kz))
    n = mx.shape[0] * my.shape[0] * mz.shape[0]
    return w_mass * mass.reshape(n, 8, 8), stiff.reshape(n, 8, 8)


def _assemble_part(mesh: Mesh, part: str, w_mass, w_cross, w_axial):
    """Element loop over one part; triplets merged deterministically by (row, col)."""
    cross = mesh.a_cross if part == "a" else mesh.b_cross
    axial = mesh.a_axial if part == "a" else mesh.b_axial
    cells = mesh.a_cells if part == "a" else mesh.b_cells
    build = _part_matrices_2d if mesh.dim == 2 else _part_matrices_3d
    mass_e, stiff_e = build(cross, axial, w_mass, w_cross, w_axial)
    rows = np.repeat(cells, cells.shape[1], axis=1).ravel()
    cols = np.tile(cells, (1, cells.shape[1])).ravel()
    n = mesh.n_nodes
    mass = sp.coo_matrix((mass_e.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    stiff = sp.coo_matrix((stiff_e.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return mass, stiff


def assemble_raw(mesh: Mesh, params: ThinParams):
    """Unconstrained (stiffness, mass) over all nodes of both parts."""
    r, h = params.r, params.h
    w_b = h / r ** (mesh.dim - 1)
    mass_a, stiff_a = _assemble_part(mesh, "a", 1.0, 1.0 / r**2, 1.0)
    mass_b, stiff_b = _assemble_part(mesh, "b", w_b, w_b, w_b / h**2)
    return stiff_a + stiff_b, mass_a + mass_b


def elimination_matrix(mesh: Mesh, constraints: ConstraintSet) -> tuple[sp.csr_matrix, np.ndarray]:
    """Map free-dof vectors to full nodal vectors (Dirichlet rows zero).

    Tie slaves expand into their masters' columns; masters that are Dirichlet
    contribute value 0 and are dropped.
    """
    n = mesh.n_nodes
    slaves = {t.slave for t in constraints.ties}
    fixed = set(constraints.dirichlet.tolist())
    if slaves & fixed:
        raise SingularMass("a dof is both Dirichlet and tie slave")
    free = np.array(sorted(set(range(n)) - slaves - fixed), dtype=int)
    col_of = {int(d): i for i, d in enumerate(free)}
    rows, cols, vals = list(free), list(range(len(free))), [1.0] * len(free)
    for t in constraints.ties:
        for m, w in zip(t.masters, t.weights):
            if int(m) in slaves:
                raise SingularMass("tie master is itself a slave")
            if int(m) in fixed:
                continue
            rows.append(t.slave)
            cols.append(col_of[int(m)])
            vals.append(float(w))
    T = sp.coo_matrix((vals, (rows, cols)), shape=(n, len(free))).tocsr()
    return T, free


@dataclass(frozen=True)
class Pencil:
    """Constrained symmetric pair (K, M) plus the free-dof expansion map.

    The pair is Jacobi-equilibrated (diag K = 1), a congruence that leaves
    every generalized eigenvalue unchanged while keeping iterative residuals
    far from the double-precision floor on stiff thin-parameter weights.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    T: sp.csr_matrix
    free: np.ndarray
    scale: np.ndarray
    params: ThinParams
    dim: int
    mesh: Mesh

    @property
    def order(self) -> int:
        return self.K.shape[0]

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Full nodal vector (both parts) from a free-dof vector."""
        return self.T @ x

    def restrict(self, full: np.ndarray) -> np.ndarray:
        """Free-dof coordinates of a full nodal vector (inverse of expand on
        vectors that satisfy the constraints)."""
        return full[self.free] / self.scale

    def export_coo(self, which: str = "K", stream: io.TextIOBase | None = None) -> str:
        """Coordinate-format debug dump, one 'row col value' line per entry."""
        out = stream or io.StringIO()
        mat = (self.K if which == "K" else self.M).tocoo()
        for i, j, v in zip(mat.row, mat.col, mat.data):
            out.write(f"{i} {j} {format(v, '.17g')}\n")
        return out.getvalue() if stream is None else ""


def _symmetrize(a: sp.csr_matrix) -> sp.csr_matrix:
    s = (a + a.T) * 0.5
    s = sp.csr_matrix(s)
    s.eliminate_zeros()
    s.sum_duplicates()
    s.sort_indices()
    return s


def assemble_pencil(mesh: Mesh, params: ThinParams,
                    constraints: ConstraintSet) -> Pencil:
    """Assemble both forms and fold constraints in by substitution.

    Substitution (rather than penalties or multipliers) keeps the reduced pair
    symmetric positive definite for the eigensolver.
    """
    stiff, mass = assemble_raw(mesh, params)
    T, free = elimination_matrix(mesh, constraints)
    K = _symmetrize(T.T @ stiff @ T)
    M = _symmetrize(T.T @ mass @ T)
    if M.shape[0] == 0 or np.any(M.diagonal() <= 0.0) or np.any(np.diff(M.indptr) == 0):
        raise SingularMass("constraint elimination produced a singular mass row")
    scale = 1.0 / np.sqrt(K.diagonal())
    D = sp.diags(scale).tocsr()
    K = _symmetrize(D @ K @ D)
    M = _symmetrize(D @ M @ D)
    return Pencil(K, M, (T @ D).tocsr(), free, scale, params, mesh.dim, mesh)
