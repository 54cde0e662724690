"""Cross-sections, thin-parameter schedules, and tensor-product meshes.

The rescaled computational domain is the union of a rod part omega x (0, 1)
and a slab part omega x (-1, 0).  Both parts carry independent tensor meshes;
the junction at height 0 is expressed later through constraints, never by
merging nodes.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDimension,
    DegenerateCell,
    NonInteriorOrigin,
    RegimeViolation,
)

WIDTH_TOL = 1e-14

# regime kinds
FINITE = "finite"
ZERO = "zero"
INFINITE = "infinite"


@dataclass(frozen=True)
class Interval:
    """Cross-section (c, d) for the planar case, with c < 0 < d."""

    c: float
    d: float


@dataclass(frozen=True)
class Rect:
    """Centered rectangular cross-section (-wx, wx) x (-wy, wy)."""

    wx: float
    wy: float


@dataclass(frozen=True)
class Geometry:
    dim: int
    omega: Interval | Rect
    measure: float

    def cross_ranges(self) -> list[tuple[float, float]]:
        """Per-direction extents of the cross-section."""
        if self.dim == 2:
            return [(self.omega.c, self.omega.d)]
        return [(-self.omega.wx, self.omega.wx), (-self.omega.wy, self.omega.wy)]


def make_geometry(dim: int, omega_spec) -> Geometry:
    """Validate a cross-section spec and compute its measure.

    omega_spec is an Interval (dim 2), a Rect (dim 3), or a plain tuple of the
    matching arity.
    """
    if dim not in (2, 3):
        raise BadDimension(f"dim must be 2 or 3, got {dim}")
    if isinstance(omega_spec, tuple):
        omega_spec = Interval(*omega_spec) if dim == 2 else Rect(*omega_spec)
    if dim == 2:
        if not isinstance(omega_spec, Interval):
            raise BadDimension("dim 2 requires an Interval cross-section")
        c, d = float(omega_spec.c), float(omega_spec.d)
        if not (c < 0.0 < d):
            raise NonInteriorOrigin(f"interval ({c}, {d}) must satisfy c < 0 < d")
        return Geometry(2, Interval(c, d), d - c)
    if not isinstance(omega_spec, Rect):
        raise BadDimension("dim 3 requires a Rect cross-section")
    wx, wy = float(omega_spec.wx), float(omega_spec.wy)
    if wx <= 0.0 or wy <= 0.0:
        raise NonInteriorOrigin(f"rectangle half-widths must be positive, got ({wx}, {wy})")
    return Geometry(3, Rect(wx, wy), 4.0 * wx * wy)


@dataclass(frozen=True)
class ThinParams:
    """One pair of small parameters: rod radius factor r and slab thickness h."""

    r: float
    h: float

    def __post_init__(self):
        if not (0.0 < self.r < 1.0):
            raise RegimeViolation(f"r must lie in (0, 1), got {self.r}")
        if not (0.0 < self.h < 1.0):
            raise RegimeViolation(f"h must lie in (0, 1), got {self.h}")

    def volume_ratio(self, dim: int) -> float:
        return self.h / self.r ** (dim - 1)


@dataclass(frozen=True)
class Regime:
    """Target of the volume ratio h / r^(N-1): a finite q > 0, zero, or infinity."""

    kind: str
    q: float | None = None

    @classmethod
    def finite(cls, q: float) -> "Regime":
        if not (q > 0.0 and math.isfinite(q)):
            raise RegimeViolation(f"finite regime needs q > 0, got {q}")
        return cls(FINITE, float(q))

    @classmethod
    def zero(cls) -> "Regime":
        return cls(ZERO)

    @classmethod
    def infinite(cls) -> "Regime":
        return cls(INFINITE)

    @property
    def q_eff(self) -> float:
        """Weight on the slab part in the limit inner products (1 off the finite regime)."""
        return self.q if self.kind == FINITE else 1.0


def _thickness_rule(regime: Regime, r: float, dim: int) -> float:
    if regime.kind == FINITE:
        return regime.q * r ** (dim - 1)
    if regime.kind == ZERO:
        return r**dim
    # infinite: sqrt(r) in the plane; r^2 sqrt(log(1/r)) keeps the dim-3 window
    if dim == 2:
        return math.sqrt(r)
    return r**2 * math.sqrt(math.log(1.0 / r))


@dataclass(frozen=True)
class RegimeSchedule:
    regime: Regime
    dim: int
    r0: float
    rho: float
    count: int
    pairs: tuple[ThinParams, ...] = field(default=(), compare=False)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


def make_schedule(regime: Regime, geometry: Geometry, r0: float, rho: float,
                  count: int) -> RegimeSchedule:
    """Generate (r_n, h_n) = (r0*rho^n, rule(r_n)) for n = 1..count.

    Every generated pair is checked against the defining inequalities of the
    regime; in particular the dim-3 infinite regime requires
    r^2 < h < r^2*log(1/r) at every index.
    """
    if not (0.0 < r0 < 1.0):
        raise RegimeViolation(f"r0 must lie in (0, 1), got {r0}")
    if not (0.0 < rho < 1.0):
        raise RegimeViolation(f"rho must lie in (0, 1), got {rho}")
    if count < 1:
        raise RegimeViolation(f"count must be >= 1, got {count}")
    dim = geometry.dim
    pairs = []
    prev_ratio = None
    for n in range(1, count + 1):
        r = r0 * rho**n
        h = _thickness_rule(regime, r, dim)
        if not (0.0 < h < 1.0):
            raise RegimeViolation(
                f"index {n}: thickness rule left (0, 1), (r, h) = ({r}, {h})")
        p = ThinParams(r, h)
        ratio = p.volume_ratio(dim)
        if regime.kind == FINITE:
            if not math.isclose(ratio, regime.q, rel_tol=1e-12):
                raise RegimeViolation(f"index {n}: ratio {ratio} != q {regime.q}")
        elif regime.kind == ZERO:
            if prev_ratio is not None and not ratio < prev_ratio:
                raise RegimeViolation(f"index {n}: ratio {ratio} not decreasing")
        else:
            if prev_ratio is not None and not ratio > prev_ratio:
                raise RegimeViolation(f"index {n}: ratio {ratio} not increasing")
            if dim == 3:
                upper = -r**2 * math.log(r)
                if not (r**2 < h < upper):
                    raise RegimeViolation(
                        f"index {n}: window r^2 < h < -r^2 log r empty or violated "
                        f"(r^2={r**2:.3e}, h={h:.3e}, upper={upper:.3e}); "
                        "reduce r0")
        prev_ratio = ratio
        pairs.append(p)
    return RegimeSchedule(regime, dim, r0, rho, count, tuple(pairs))


@dataclass(frozen=True)
class MeshLevels:
    """Cell counts: m_omega per cross direction, m_a / m_b along the axis."""

    m_omega: int
    m_a: int
    m_b: int


@dataclass(frozen=True)
class Grading:
    """Geometric refinement of the slab cross-section toward the origin.

    The cell adjacent to 0 on each side is split at base*ratio^j for
    j = 1..origin_cells, so the smallest width is base*ratio^origin_cells.
    """

    origin_cells: int = 0
    ratio: float = 0.5


def _side_split(lo: float, hi: float, m: int) -> tuple[int, int]:
    """Allocate m cells to the two sides of 0 inside (lo, hi), at least 1 each."""
    left = -lo
    total = hi - lo
    n_left = int(round(m * left / total))
    n_left = min(max(n_left, 1), m - 1)
    return n_left, m - n_left


def _graded_side(length: float, n_cells: int, grading: Grading) -> np.ndarray:
    """Node offsets 0..length measured away from the origin, graded near 0."""
    base = length / n_cells
    nodes = [0.0]
    if grading.origin_cells > 0 and grading.ratio < 1.0:
        for j in range(grading.origin_cells, 0, -1):
            nodes.append(base * grading.ratio**j)
    nodes.extend(base * i for i in range(1, n_cells + 1))
    return np.asarray(nodes)


def _cross_grid(lo: float, hi: float, m: int, grading: Grading) -> np.ndarray:
    """1D cross-section grid on (lo, hi) with a node at 0 (when m >= 2)."""
    if m == 1:
        return np.array([lo, hi])
    n_left, n_right = _side_split(lo, hi, m)
    left = -_graded_side(-lo, n_left, grading)[::-1]
    right = _graded_side(hi, n_right, grading)
    grid = np.concatenate([left[:-1], right])
    widths = np.diff(grid)
    if np.any(widths < WIDTH_TOL):
        raise DegenerateCell(f"cross grid cell below {WIDTH_TOL}")
    return grid


@dataclass(frozen=True)
class Mesh:
    """Tensor meshes of the rod part (index a) and slab part (index b).

    1D grids fully determine nodes and cells; node ids are row-major over
    (cross directions..., axial), with the a-part numbered before the b-part.
    """

    dim: int
    geometry: Geometry
    a_cross: tuple[np.ndarray, ...]
    a_axial: np.ndarray
    b_cross: tuple[np.ndarray, ...]
    b_axial: np.ndarray
    grading: Grading

    # -- node bookkeeping ---------------------------------------------------
    @staticmethod
    def _shape(cross, axial):
        return tuple(len(g) for g in cross) + (len(axial),)

    @property
    def a_shape(self):
        return self._shape(self.a_cross, self.a_axial)

    @property
    def b_shape(self):
        return self._shape(self.b_cross, self.b_axial)

    @property
    def n_a(self) -> int:
        return int(np.prod(self.a_shape))

    @property
    def n_b(self) -> int:
        return int(np.prod(self.b_shape))

    @property
    def n_nodes(self) -> int:
        return self.n_a + self.n_b

    @staticmethod
    def _nodes(cross, axial):
        grids = np.meshgrid(*cross, axial, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @property
    def a_nodes(self) -> np.ndarray:
        return self._nodes(self.a_cross, self.a_axial)

    @property
    def b_nodes(self) -> np.ndarray:
        return self._nodes(self.b_cross, self.b_axial)

    def _axial_level_ids(self, part: str, level: int) -> np.ndarray:
        """Global ids of all part nodes at a given axial grid index."""
        shape = self.a_shape if part == "a" else self.b_shape
        offset = 0 if part == "a" else self.n_a
        ids = np.arange(int(np.prod(shape))).reshape(shape)
        return offset + ids[..., level].ravel()

    # -- tagged node sets ---------------------------------------------------
    @property
    def dirichlet_top(self) -> np.ndarray:
        """Rod nodes on the clamped top face (axial coordinate 1)."""
        return self._axial_level_ids("a", len(self.a_axial) - 1)

    @property
    def junction_a(self) -> np.ndarray:
        """Rod nodes on the junction face (axial coordinate 0)."""
        return self._axial_level_ids("a", 0)

    @property
    def junction_b_surface(self) -> np.ndarray:
        """Slab nodes on the junction face; tie masters live here."""
        return self._axial_level_ids("b", len(self.b_axial) - 1)

    @property
    def dirichlet_lateral_b(self) -> np.ndarray:
        """Slab nodes on the clamped lateral boundary (closure included)."""
        shape = self.b_shape
        ids = np.arange(self.n_b).reshape(shape)
        mask = np.zeros(shape, dtype=bool)
        for axis in range(self.dim - 1):
            idx = [slice(None)] * len(shape)
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = shape[axis] - 1
            mask[tuple(idx)] = True
        return self.n_a + ids[mask].ravel()

    # -- cells ----------------------------------------------------------------
    @staticmethod
    def _cells(cross, axial, offset):
        shape = tuple(len(g) for g in cross) + (len(axial),)
        ids = np.arange(int(np.prod(shape))).reshape(shape)
        dim = len(shape)
        corners = []
        for local in np.ndindex(*(2,) * dim):
            sl = tuple(slice(l, s - 1 + l) for l, s in zip(local, shape))
            corners.append(ids[sl].ravel())
        return offset + np.stack(corners, axis=1)

    @property
    def a_cells(self) -> np.ndarray:
        return self._cells(self.a_cross, self.a_axial, 0)

    @property
    def b_cells(self) -> np.ndarray:
        return self._cells(self.b_cross, self.b_axial, self.n_a)

    def part_volume(self, part: str) -> float:
        cross = self.a_cross if part == "a" else self.b_cross
        axial = self.a_axial if part == "a" else self.b_axial
        vol = float(np.sum(np.diff(axial)))
        for g in cross:
            vol *= float(np.sum(np.diff(g)))
        return vol

    def signature(self) -> str:
        cells_a = "x".join(str(len(g) - 1) for g in self.a_cross)
        cells_b = "x".join(str(len(g) - 1) for g in self.b_cross)
        return (f"a[{cells_a}x{len(self.a_axial) - 1}]"
                f"b[{cells_b}x{len(self.b_axial) - 1}]n{self.n_nodes}")

    def export_text(self, stream: io.TextIOBase | None = None) -> str:
        """Plain-text debug dump: one node record then one cell record per line."""
        out = stream or io.StringIO()
        for label, nodes, cells, off in (
            ("a", self.a_nodes, self.a_cells, 0),
            ("b", self.b_nodes, self.b_cells, self.n_a),
        ):
            for i, xyz in enumerate(nodes):
                coords = " ".join(format(v, ".9g") for v in xyz)
                out.write(f"node {label} {off + i} {coords}\n")
            for i, conn in enumerate(cells):
                out.write(f"cell {label} {i} " + " ".join(map(str, conn)) + "\n")
        return out.getvalue() if stream is None else ""


def make_mesh(geometry: Geometry, levels: MeshLevels,
              grading: Grading = Grading()) -> Mesh:
    """Build tensor meshes of both parts of the rescaled domain.

    The slab cross-section is geometrically graded toward the origin so the
    tie points (which cluster at 0 as r shrinks) fall in resolved cells.
    """
    if min(levels.m_omega, levels.m_a, levels.m_b) < 1:
        raise DegenerateCell("all level counts must be >= 1")
    if not (0.0 < grading.ratio <= 1.0):
        raise DegenerateCell(f"grading ratio must lie in (0, 1], got {grading.ratio}")
    if grading.origin_cells < 0:
        raise DegenerateCell("origin_cells must be >= 0")
    none = Grading(0, 1.0)
    a_cross = tuple(
        _cross_grid(lo, hi, levels.m_omega, none) for lo, hi in geometry.cross_ranges())
    b_cross = tuple(
        _cross_grid(lo, hi, levels.m_omega, grading) for lo, hi in geometry.cross_ranges())
    a_axial = np.linspace(0.0, 1.0, levels.m_a + 1)
    b_axial = np.linspace(-1.0, 0.0, levels.m_b + 1)
    for g in (*a_cross, *b_cross, a_axial, b_axial):
        if np.any(np.diff(g) < WIDTH_TOL):
            raise DegenerateCell(f"cell width below {WIDTH_TOL}")
    return Mesh(geometry.dim, geometry, a_cross, a_axial, b_cross, b_axial, grading)


def origin_base_width(geometry: Geometry, m_omega: int) -> float:
    """Widest origin-adjacent cell of the ungraded cross grid at level m_omega."""
    widest = 0.0
    for lo, hi in geometry.cross_ranges():
        if m_omega == 1:
            widest = max(widest, hi - lo)
            continue
        n_left, n_right = _side_split(lo, hi, m_omega)
        widest = max(widest, -lo / n_left, hi / n_right)
    return widest


def grading_for(base_width: float, target: float, ratio: float = 0.5) -> Grading:
    """Pick origin_cells so the smallest origin cell is <= target."""
    if base_width <= target or ratio >= 1.0:
        return Grading(0, ratio)
    n = math.ceil(math.log(base_width / target) / math.log(1.0 / ratio))
    return Grading(int(n), ratio)
