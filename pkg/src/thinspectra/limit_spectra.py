"""Exact limit spectra of the reduced eigenvalue problems.

Three closed-form branches (rod with free/clamped base, cross-section
Dirichlet problems, split cross-sections) and the planar coupled junction
problem, whose eigenvalues are the positive roots of a transcendental
characteristic function and whose multiplicities come from the nullity of a
3x3 junction matrix acting on the piecewise sine amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import RegimeMismatch, RootLoss
from .geometry import (FINITE, INFINITE, ZERO, Geometry, Interval, Regime,
                       make_geometry)

ROD_ND = "ROD_ND"
ROD_DD = "ROD_DD"
CROSS = "CROSS"
CROSS_LEFT = "CROSS_LEFT"
CROSS_RIGHT = "CROSS_RIGHT"
COUPLED = "COUPLED"

MERGE_TOL = 1e-9
NULLITY_RTOL = 1e-8
S_BISECT_TOL = 1e-13
ROOT_RESIDUAL_RTOL = 1e-10

_SPACE_OF = {FINITE: "V", ZERO: "V0", INFINITE: "Vinf"}


# ---------------------------------------------------------------------------
# analytic eigenvector descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitEigenvector:
    """Analytic eigenvector of a limit problem.

    The rod part is a_amp*sin(s*(1-z)) on (0,1).  The planar slab part is
    b_minus*sin(s*(x-c)) left of the origin and b_plus*sin(s*(d-x)) right of
    it; the dim-3 slab part is b_amp times a product of half-period sines
    indexed by (b_i, b_j).  All clamped boundary values vanish identically.
    """

    dim: int
    geometry: Geometry
    space: str
    q_eff: float
    s: float
    a_amp: float = 0.0
    b_minus: float = 0.0
    b_plus: float = 0.0
    b_amp: float = 0.0
    b_i: int = 0
    b_j: int = 0

    @property
    def value(self) -> float:
        return self.s**2

    # rod part ------------------------------------------------------------
    def eval_axial(self, z):
        return self.a_amp * np.sin(self.s * (1.0 - np.asarray(z)))

    def eval_axial_d(self, z):
        return -self.a_amp * self.s * np.cos(self.s * (1.0 - np.asarray(z)))

    # slab part -----------------------------------------------------------
    def _freqs(self):
        wx, wy = self.geometry.omega.wx, self.geometry.omega.wy
        return self.b_i * math.pi / (2 * wx), self.b_j * math.pi / (2 * wy)

    def eval_cross(self, *coords):
        if self.dim == 2:
            x = np.asarray(coords[0])
            c, d = self.geometry.omega.c, self.geometry.omega.d
            return np.where(x < 0.0,
                            self.b_minus * np.sin(self.s * (x - c)),
                            self.b_plus * np.sin(self.s * (d - x)))
        x, y = np.asarray(coords[0]), np.asarray(coords[1])
        fx, fy = self._freqs()
        wx, wy = self.geometry.omega.wx, self.geometry.omega.wy
        return self.b_amp * np.sin(fx * (x + wx)) * np.sin(fy * (y + wy))

    def eval_cross_grad(self, *coords):
        if self.dim == 2:
            x = np.asarray(coords[0])
            c, d = self.geometry.omega.c, self.geometry.omega.d
            return (np.where(x < 0.0,
                             self.b_minus * self.s * np.cos(self.s * (x - c)),
                             -self.b_plus * self.s * np.cos(self.s * (d - x))),)
        x, y = np.asarray(coords[0]), np.asarray(coords[1])
        fx, fy = self._freqs()
        wx, wy = self.geometry.omega.wx, self.geometry.omega.wy
        sx, cx = np.sin(fx * (x + wx)), np.cos(fx * (x + wx))
        sy, cy = np.sin(fy * (y + wy)), np.cos(fy * (y + wy))
        return (self.b_amp * fx * cx * sy, self.b_amp * fy * sx * cy)


def _sinint(w: float, length: float) -> float:
    """Integral of cos(w t) over (0, length), smooth through w = 0."""
    return length * float(np.sinc(w * length / math.pi))


def _int_ss(sa: float, sb: float, length: float) -> float:
    return 0.5 * (_sinint(sa - sb, length) - _sinint(sa + sb, length))


def _int_cc(sa: float, sb: float, length: float) -> float:
    return 0.5 * (_sinint(sa - sb, length) + _sinint(sa + sb, length))


def _pair_forms(u: LimitEigenvector, v: LimitEigenvector) -> tuple[float, float]:
    """Closed-form (mass, energy) of a descriptor pair in the limit inner products."""
    g = u.geometry
    mass = g.measure * u.a_amp * v.a_amp * _int_ss(u.s, v.s, 1.0)
    energy = g.measure * (u.a_amp * u.s) * (v.a_amp * v.s) * _int_cc(u.s, v.s, 1.0)
    if u.dim == 2:
        left, right = -g.omega.c, g.omega.d
        bm = u.b_minus * v.b_minus
        bp = u.b_plus * v.b_plus
        mass += u.q_eff * (bm * _int_ss(u.s, v.s, left) + bp * _int_ss(u.s, v.s, right))
        energy += u.q_eff * u.s * v.s * (bm * _int_cc(u.s, v.s, left)
                                         + bp * _int_cc(u.s, v.s, right))
    else:
        wx, wy = g.omega.wx, g.omega.wy
        fu, gu = u._freqs()
        fv, gv = v._freqs()
        bx = _int_ss(fu, fv, 2 * wx)
        by = _int_ss(gu, gv, 2 * wy)
        bb = u.b_amp * v.b_amp
        mass += u.q_eff * bb * bx * by
        energy += u.q_eff * bb * (fu * fv * _int_cc(fu, fv, 2 * wx) * by
                                  + bx * gu * gv * _int_cc(gu, gv, 2 * wy))
    return mass, energy


def limit_inner_products(u: LimitEigenvector, v: LimitEigenvector,
                         regime: Regime, q: float | None = None) -> tuple[float, float]:
    """Mass and energy inner products of two limit eigenvectors.

    The slab weight is q in the finite regime and 1 otherwise; mixing
    descriptors from different limit spaces is refused.
    """
    space = _SPACE_OF[regime.kind]
    if u.space != space or v.space != space:
        raise RegimeMismatch(f"descriptors from {u.space}/{v.space}, regime wants {space}")
    q_eff = float(q) if (regime.kind == FINITE and q is not None) else regime.q_eff
    if not (math.isclose(u.q_eff, q_eff, rel_tol=1e-12)
            and math.isclose(v.q_eff, q_eff, rel_tol=1e-12)):
        raise RegimeMismatch("descriptor slab weight disagrees with the requested regime")
    return _pair_forms(u, v)


def _normalized(u: LimitEigenvector) -> LimitEigenvector:
    mass, _ = _pair_forms(u, u)
    f = 1.0 / math.sqrt(mass)
    return replace(u, a_amp=u.a_amp * f, b_minus=u.b_minus * f,
                   b_plus=u.b_plus * f, b_amp=u.b_amp * f)


def _orthonormalized(vecs: list[LimitEigenvector]) -> list[LimitEigenvector]:
    """Gram-Schmidt in the limit mass inner product (within one eigenspace)."""
    out: list[LimitEigenvector] = []
    for u in vecs:
        cur = u
        for w in out:
            coef, _ = _pair_forms(w, cur)
            cur = replace(cur,
                          a_amp=cur.a_amp - coef * w.a_amp,
                          b_minus=cur.b_minus - coef * w.b_minus,
                          b_plus=cur.b_plus - coef * w.b_plus,
                          b_amp=cur.b_amp - coef * w.b_amp)
        out.append(_normalized(cur))
    return out


# ---------------------------------------------------------------------------
# closed-form branches
# ---------------------------------------------------------------------------

def rod_neumann_dirichlet(k_max: int, geometry: Geometry | None = None,
                          space: str = "V", q_eff: float = 1.0):
    """Rod modes with free base and clamped top: ((pi/2 + k*pi)^2, cos((pi/2+k*pi) z))."""
    out = []
    for k in range(k_max):
        s = math.pi / 2 + k * math.pi
        vec = None
        if geometry is not None:
            vec = LimitEigenvector(geometry.dim, geometry, space, q_eff, s,
                                   a_amp=(-1.0) ** k)
        out.append((s * s, vec))
    return out


def rod_dirichlet_dirichlet(k_max: int, geometry: Geometry | None = None,
                            space: str = "Vinf", q_eff: float = 1.0):
    """Rod modes clamped at both ends: ((k*pi)^2, sin(k*pi*z)) for k >= 1."""
    out = []
    for k in range(1, k_max + 1):
        s = k * math.pi
        vec = None
        if geometry is not None:
            vec = LimitEigenvector(geometry.dim, geometry, space, q_eff, s,
                                   a_amp=(-1.0) ** (k + 1))
        out.append((s * s, vec))
    return out


def _rect_pairs(geometry: Geometry, k_max: int):
    """Smallest k_max Dirichlet values of the rectangle, ties kept."""
    wx, wy = geometry.omega.wx, geometry.omega.wy
    ax, ay = (math.pi / (2 * wx)) ** 2, (math.pi / (2 * wy)) ** 2
    cap = k_max * k_max * ax + ay
    i_max = int(math.ceil(math.sqrt(cap / ax))) + 1
    j_max = int(math.ceil(math.sqrt(cap / ay))) + 1
    entries = [(i * i * ax + j * j * ay, i, j)
               for i in range(1, i_max + 1) for j in range(1, j_max + 1)]
    entries.sort()
    return entries[:max(k_max, _distinct_count(entries, k_max))]


def _distinct_count(entries, k_max):
    """Length needed so the list covers k_max distinct values (ties included)."""
    seen = 0
    last = None
    for idx, e in enumerate(entries):
        if last is None or not math.isclose(e[0], last, rel_tol=1e-12):
            seen += 1
            last = e[0]
        if seen > k_max:
            return idx
    return len(entries)


def cross_section_dirichlet(geometry: Geometry, k_max: int, split: bool = False,
                            space: str | None = None, q_eff: float = 1.0):
    """Dirichlet modes of the cross-section (or of its two halves when split).

    Returns ascending (value, tag, descriptor) triples; k_max entries per
    branch, so a split interval yields 2*k_max entries.
    """
    out = []
    if geometry.dim == 2:
        c, d = geometry.omega.c, geometry.omega.d
        if split:
            space = space or "V0"
            for k in range(1, k_max + 1):
                s = k * math.pi / (-c)
                out.append((s * s, CROSS_LEFT,
                            LimitEigenvector(2, geometry, space, q_eff, s, b_minus=1.0)))
                s = k * math.pi / d
                out.append((s * s, CROSS_RIGHT,
                            LimitEigenvector(2, geometry, space, q_eff, s, b_plus=1.0)))
        else:
            space = space or "Vinf"
            for k in range(1, k_max + 1):
                s = k * math.pi / (d - c)
                out.append((s * s, CROSS,
                            LimitEigenvector(2, geometry, space, q_eff, s,
                                             b_minus=1.0, b_plus=(-1.0) ** (k + 1))))
    else:
        space = space or "V"
        for value, i, j in _rect_pairs(geometry, k_max):
            out.append((value, CROSS,
                        LimitEigenvector(3, geometry, space, q_eff, math.sqrt(value),
                                         b_amp=1.0, b_i=i, b_j=j)))
    out.sort(key=lambda e: e[0])
    return out


# ---------------------------------------------------------------------------
# planar coupled junction problem
# ---------------------------------------------------------------------------

def junction_characteristic(lam, c: float, d: float, measure: float, q: float):
    """Characteristic function whose positive roots are the coupled eigenvalues."""
    s = np.sqrt(np.asarray(lam, dtype=float))
    return (measure * np.sin(c * s) * np.sin(d * s) * np.cos(s)
            - q * np.sin(s) * np.sin(d * s) * np.cos(c * s)
            + q * np.sin(s) * np.sin(c * s) * np.cos(d * s))


def characteristic_scale(c: float, d: float, measure: float, q: float) -> float:
    """Amplitude bound of the characteristic function's three terms."""
    return max(measure, q)


def junction_matrix(lam: float, c: float, d: float, measure: float, q: float) -> np.ndarray:
    """3x3 system on the amplitudes (A, B-, B+): two continuity rows, one flux row."""
    s = math.sqrt(lam)
    return np.array([
        [math.sin(s), math.sin(c * s), 0.0],
        [0.0, -math.sin(c * s), -math.sin(d * s)],
        [measure * math.cos(s), q * math.cos(c * s), q * math.cos(d * s)],
    ])


def _char_in_s(s, c, d, measure, q):
    return junction_characteristic(np.asarray(s) ** 2, c, d, measure, q)


def _char_ds(s, c, d, measure, q):
    """Derivative of the characteristic function with respect to s."""
    s = np.asarray(s, dtype=float)
    sc, cc = np.sin(c * s), np.cos(c * s)
    sd, cd = np.sin(d * s), np.cos(d * s)
    s1, c1 = np.sin(s), np.cos(s)
    t1 = measure * (c * cc * sd * c1 + d * sc * cd * c1 - sc * sd * s1)
    t2 = -q * (c1 * sd * cc + d * s1 * cd * cc - c * s1 * sd * sc)
    t3 = q * (c1 * sc * cd + c * s1 * cc * cd - d * s1 * sc * sd)
    return t1 + t2 + t3


def _bisect(f, lo, hi, tol=S_BISECT_TOL):
    flo = f(lo)
    if flo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (flo < 0.0) != (fm < 0.0):
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _nullity_basis(lam, c, d, measure, q):
    J = junction_matrix(lam, c, d, measure, q)
    _, sing, vt = np.linalg.svd(J)
    null = vt[sing < NULLITY_RTOL * sing[0]]
    return null.shape[0], null


def _find_coupled_roots(c, d, measure, q, k_max):
    """Scan in s = sqrt(lambda), certify sign changes by bisection and
    tangential (double) roots by a derivative bisection plus a nullity check."""
    f = lambda s: float(_char_in_s(s, c, d, measure, q))
    df = lambda s: float(_char_ds(s, c, d, measure, q))
    step = math.pi / (8.0 * max(1.0, abs(c), d))
    scale = characteristic_scale(c, d, measure, q)
    grid_zero = 1e-12 * scale
    residual_tol = ROOT_RESIDUAL_RTOL * scale

    roots: list[float] = []

    def push(s_root):
        if abs(f(s_root)) > residual_tol:
            raise RootLoss(f"uncertified root near s={s_root}",
                           interval=(s_root - step, s_root + step))
        if not roots or s_root - roots[-1] > 1e-9:
            roots.append(s_root)

    s_lo = step
    f_lo = f(s_lo)
    while len(roots) < k_max:
        if s_lo > 1e4:
            raise RootLoss("scan window exhausted", interval=(0.0, s_lo))
        s_hi = s_lo + step
        f_hi = f(s_hi)
        if abs(f_lo) <= grid_zero:
            # grid point sits on a root; classify by the flanking signs
            fl, fr = f(s_lo - 0.25 * step), f(s_hi)
            if (fl < 0.0) != (fr < 0.0):
                push(_bisect(f, s_lo - 0.25 * step, s_hi))
            else:
                m, _ = _nullity_basis(s_lo**2, c, d, measure, q)
                if m >= 2:
                    push(s_lo)
                else:
                    raise RootLoss(f"grid zero at s={s_lo} is neither simple nor double",
                                   interval=(s_lo - 0.25 * step, s_hi))
        elif abs(f_hi) > grid_zero:
            if (f_lo < 0.0) != (f_hi < 0.0):
                push(_bisect(f, s_lo, s_hi))
            else:
                d_lo, d_hi = df(s_lo), df(s_hi)
                if (d_lo < 0.0) != (d_hi < 0.0):
                    s_ext = _bisect(df, s_lo, s_hi)
                    f_ext = f(s_ext)
                    if abs(f_ext) <= residual_tol:
                        m, _ = _nullity_basis(s_ext**2, c, d, measure, q)
                        if m >= 2:
                            push(s_ext)
                        else:
                            raise RootLoss(
                                f"tangential dip at s={s_ext} with simple junction nullity",
                                interval=(s_lo, s_hi))
                    elif (f_ext < 0.0) != (f_lo < 0.0):
                        # two distinct crossings inside one scan step
                        push(_bisect(f, s_lo, s_ext))
                        push(_bisect(f, s_ext, s_hi))
        s_lo, f_lo = s_hi, f_hi
    return roots[:k_max]


def coupled_junction_spectrum(c: float, d: float, omega_measure: float, q: float,
                              k_max: int, geometry: Geometry | None = None):
    """First k_max coupled eigenvalues with multiplicities and amplitude bases.

    Multiplicity is the nullity (at rank tolerance 1e-8) of the junction
    matrix; the returned descriptors are the null-space basis, orthonormalized
    in the limit mass inner product.
    """
    if geometry is None:
        geometry = make_geometry(2, Interval(c, d))
    out = []
    for s in _find_coupled_roots(c, d, omega_measure, q, k_max):
        lam = s * s
        mult, basis = _nullity_basis(lam, c, d, omega_measure, q)
        vecs = [LimitEigenvector(2, geometry, "V", q, s, a_amp=v[0],
                                 b_minus=v[1], b_plus=v[2]) for v in basis]
        out.append((lam, mult, _orthonormalized(vecs)))
    return out


# ---------------------------------------------------------------------------
# gathering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitEigenvalue:
    value: float
    multiplicity: int
    tags: frozenset
    vectors: tuple[LimitEigenvector, ...]


@dataclass(frozen=True)
class LimitSpectrum:
    entries: tuple[LimitEigenvalue, ...]
    regime: Regime
    geometry: Geometry
    q_eff: float

    def values(self) -> list[float]:
        return [e.value for e in self.entries]

    def multiplicities(self) -> list[int]:
        return [e.multiplicity for e in self.entries]

    def expand(self, count: int | None = None):
        """Multiplicity-weighted ascending (value, vector, entry_index) triples."""
        out = []
        for idx, e in enumerate(self.entries):
            for vec in e.vectors:
                out.append((e.value, vec, idx))
        return out[:count] if count is not None else out


def _merge(branches, tol=MERGE_TOL):
    """Unify coincident branch values, adding multiplicities."""
    branches = sorted(branches, key=lambda e: e[0])
    merged: list[list] = []
    for value, tag, vec in branches:
        if merged and abs(value - merged[-1][0]) <= tol * max(1.0, value):
            merged[-1][1].add(tag)
            merged[-1][2].append(vec)
        else:
            merged.append([value, {tag}, [vec]])
    return merged


def gathered_spectrum(regime: Regime, geometry: Geometry, q: float | None,
                      k_max: int) -> LimitSpectrum:
    """Union of the regime's branch spectra, multiplicities added on coincidence.

    Planar finite regime solves the coupled junction problem; the other planar
    regimes and every dim-3 regime gather uncoupled rod and cross-section
    branches.  Truncation counts distinct values.
    """
    if regime.kind == FINITE:
        q_eff = float(q if q is not None else regime.q)
    else:
        q_eff = 1.0
    space = _SPACE_OF[regime.kind]

    if geometry.dim == 2 and regime.kind == FINITE:
        coupled = coupled_junction_spectrum(geometry.omega.c, geometry.omega.d,
                                            geometry.measure, q_eff, k_max, geometry)
        entries = tuple(LimitEigenvalue(lam, mult, frozenset({COUPLED}), tuple(vecs))
                        for lam, mult, vecs in coupled)
        return LimitSpectrum(entries, regime, geometry, q_eff)

    branches = []
    if geometry.dim >= 3 or regime.kind == ZERO:
        branches += [(v, ROD_ND, vec) for v, vec in
                     rod_neumann_dirichlet(k_max, geometry, space, q_eff)]
    else:
        branches += [(v, ROD_DD, vec) for v, vec in
                     rod_dirichlet_dirichlet(k_max, geometry, space, q_eff)]
    split = geometry.dim == 2 and regime.kind == ZERO
    branches += cross_section_dirichlet(geometry, k_max, split=split,
                                        space=space, q_eff=q_eff)

    entries = []
    for value, tags, vecs in _merge(branches)[:k_max]:
        vecs = _orthonormalized(vecs)
        entries.append(LimitEigenvalue(value, len(vecs), frozenset(tags), tuple(vecs)))
    return LimitSpectrum(tuple(entries[:k_max]), regime, geometry, q_eff)
