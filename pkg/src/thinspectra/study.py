"""Convergence studies: sweep a schedule, match discrete against limit spectra,
and evaluate the eigenvalue bound, orthonormality, and corrector trends."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import Pencil, assemble_pencil, build_constraints
from .eigensolve import Spectrum, smallest_eigenpairs
from .errors import ClusterSkipped, NotConverged, OrderViolation
from .geometry import (Geometry, Grading, MeshLevels, Regime, RegimeSchedule,
                       ThinParams, grading_for, make_mesh, origin_base_width)
from .limit_spectra import LimitEigenvector, LimitSpectrum, gathered_spectrum

BOUND_SLACK = 1e-12

_GAUSS3 = np.array([0.5 - math.sqrt(0.15), 0.5, 0.5 + math.sqrt(0.15)])
_GAUSS3_W = np.array([5.0, 8.0, 5.0]) / 18.0


def minmax_bound(k: int) -> float:
    """Upper bound 2^k k^2 pi^2 on the k-th discrete eigenvalue."""
    return 2.0**k * k * k * math.pi**2


@dataclass(frozen=True)
class MatchEntry:
    k: int
    limit_value: float
    discrete_value: float
    error: float
    entry_index: int


def match_spectra(discrete, limit: LimitSpectrum, K: int) -> list[MatchEntry]:
    """Greedy in-order pairing of ascending discrete values against the
    multiplicity-expanded limit values; a cluster of size m consumes m
    consecutive discrete values."""
    values = discrete.values if isinstance(discrete, Spectrum) else np.asarray(discrete)
    if np.any(np.diff(values) < 0.0):
        raise OrderViolation("discrete eigenvalues are not ascending")
    expanded = limit.expand()
    if len(expanded) < K:
        raise ValueError(f"limit spectrum holds {len(expanded)} values, need {K}")
    if len(values) < K:
        raise ValueError(f"discrete spectrum holds {len(values)} values, need {K}")
    out = []
    for k in range(K):
        lim_v, _, idx = expanded[k]
        out.append(MatchEntry(k + 1, lim_v, float(values[k]),
                              abs(float(values[k]) - lim_v), idx))
    return out


def orthonormality_check(spectrum: Spectrum, pencil: Pencil) -> float:
    """Max deviation of the discrete mass Gram matrix from the identity."""
    X = spectrum.vectors
    G = X.T @ (pencil.M @ X)
    return float(np.abs(G - np.eye(X.shape[1])).max())


# ---------------------------------------------------------------------------
# corrector norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectorNorms:
    """H1 distances to the limit eigenvector and the weighted gradient norms
    whose decay expresses the strong convergences."""

    aH1: float
    bH1: float
    ga: float
    gb: float


def _edge(grid):
    h = np.diff(grid)
    return grid[:-1], h


def _h1_components_2d(xg, zg, U, f_val, f_dx, f_dz):
    """Squared L2 errors of (value, d/dx, d/dz) against analytic callables."""
    x0, hx = _edge(xg)
    z0, hz = _edge(zg)
    U00, U10 = U[:-1, :-1], U[1:, :-1]
    U01, U11 = U[:-1, 1:], U[1:, 1:]
    e_val = e_dx = e_dz = 0.0
    for ti, wi in zip(_GAUSS3, _GAUSS3_W):
        for tj, wj in zip(_GAUSS3, _GAUSS3_W):
            X = (x0 + ti * hx)[:, None]
            Z = (z0 + tj * hz)[None, :]
            val = ((1 - ti) * (1 - tj) * U00 + ti * (1 - tj) * U10
                   + (1 - ti) * tj * U01 + ti * tj * U11)
            ddx = ((1 - tj) * (U10 - U00) + tj * (U11 - U01)) / hx[:, None]
            ddz = ((1 - ti) * (U01 - U00) + ti * (U11 - U10)) / hz[None, :]
            w = wi * wj * hx[:, None] * hz[None, :]
            e_val += float(np.sum(w * (val - f_val(X, Z)) ** 2))
            e_dx += float(np.sum(w * (ddx - f_dx(X, Z)) ** 2))
            e_dz += float(np.sum(w * (ddz - f_dz(X, Z)) ** 2))
    return e_val, e_dx, e_dz


def _h1_components_3d(xg, yg, zg, U, f_val, f_grad):
    """Squared L2 errors of (value, d/dx, d/dy, d/dz) for trilinear fields."""
    x0, hx = _edge(xg)
    y0, hy = _edge(yg)
    z0, hz = _edge(zg)
    e = [0.0, 0.0, 0.0, 0.0]
    corners = {loc: U[loc[0]:U.shape[0] - 1 + loc[0],
                     loc[1]:U.shape[1] - 1 + loc[1],
                     loc[2]:U.shape[2] - 1 + loc[2]]
               for loc in np.ndindex(2, 2, 2)}
    for ti, wi in zip(_GAUSS3, _GAUSS3_W):
        for tj, wj in zip(_GAUSS3, _GAUSS3_W):
            for tk, wk in zip(_GAUSS3, _GAUSS3_W):
                t = (ti, tj, tk)
                X = (x0 + ti * hx)[:, None, None]
                Y = (y0 + tj * hy)[None, :, None]
                Z = (z0 + tk * hz)[None, None, :]
                val = np.zeros_like(corners[0, 0, 0])
                grad = [np.zeros_like(val) for _ in range(3)]
                for loc, Uc in corners.items():
                    shp = [t[a] if loc[a] else 1 - t[a] for a in range(3)]
                    val = val + shp[0] * shp[1] * shp[2] * Uc
                    for a in range(3):
                        sgn = 1.0 if loc[a] else -1.0
                        other = [shp[b] for b in range(3) if b != a]
                        grad[a] = grad[a] + sgn * other[0] * other[1] * Uc
                grad[0] = grad[0] / hx[:, None, None]
                grad[1] = grad[1] / hy[None, :, None]
                grad[2] = grad[2] / hz[None, None, :]
                w = wi * wj * wk * hx[:, None, None] * hy[None, :, None] * hz[None, None, :]
                fv, fg = f_val(X, Y, Z), f_grad(X, Y, Z)
                e[0] += float(np.sum(w * (val - fv) ** 2))
                for a in range(3):
                    e[a + 1] += float(np.sum(w * (grad[a] - fg[a]) ** 2))
    return tuple(e)


def _slab_scale(regime: Regime, params: ThinParams, dim: int) -> float:
    """Factor carrying the slab part of a discrete eigenvector to limit scale."""
    return math.sqrt(params.volume_ratio(dim) / regime.q_eff)


def _interpolant(pencil: Pencil, limit_vec: LimitEigenvector, s_b: float) -> np.ndarray:
    """Nodal interpolation of the limit eigenvector in discrete scaling."""
    mesh = pencil.mesh
    full = np.empty(mesh.n_nodes)
    a_nodes = mesh.a_nodes
    full[:mesh.n_a] = limit_vec.eval_axial(a_nodes[:, -1])
    b_nodes = mesh.b_nodes
    full[mesh.n_a:] = limit_vec.eval_cross(*(b_nodes[:, i] for i in range(mesh.dim - 1))) / s_b
    return full


def corrector_check(pencil: Pencil, vector: np.ndarray, limit_vec,
                    regime: Regime, params: ThinParams) -> CorrectorNorms:
    """H1 distances and weighted gradient norms for one matched simple pair.

    The slab component is rescaled by sqrt((h/r^(N-1))/q_eff) before the
    comparison; the sign is aligned through the discrete mass inner product
    against the interpolated limit eigenvector.  Passing a multiple limit
    eigenvalue raises ClusterSkipped: its eigenvectors are not individually
    identifiable.
    """
    if not isinstance(limit_vec, LimitEigenvector):
        if limit_vec.multiplicity > 1:
            raise ClusterSkipped(f"limit value {limit_vec.value} has "
                                 f"multiplicity {limit_vec.multiplicity}")
        limit_vec = limit_vec.vectors[0]
    mesh = pencil.mesh
    dim = mesh.dim
    s_b = _slab_scale(regime, params, dim)
    interp = _interpolant(pencil, limit_vec, s_b)
    sign = float(np.sign(vector @ (pencil.M @ pencil.restrict(interp))) or 1.0)
    full = pencil.expand(sign * vector)
    Ua = full[:mesh.n_a].reshape(mesh.a_shape)
    Ub = (s_b * full[mesh.n_a:]).reshape(mesh.b_shape)

    if dim == 2:
        a_val, a_cross, a_axial = _h1_components_2d(
            mesh.a_cross[0], mesh.a_axial, Ua,
            lambda X, Z: limit_vec.eval_axial(Z) + 0.0 * X,
            lambda X, Z: np.zeros_like(X * Z),
            lambda X, Z: limit_vec.eval_axial_d(Z) + 0.0 * X)
        b_val, b_cross, b_axial = _h1_components_2d(
            mesh.b_cross[0], mesh.b_axial, Ub,
            lambda X, Z: limit_vec.eval_cross(X) + 0.0 * Z,
            lambda X, Z: limit_vec.eval_cross_grad(X)[0] + 0.0 * Z,
            lambda X, Z: np.zeros_like(X * Z))
        a_cross_total = a_cross
        b_cross_total = b_cross
    else:
        a_val, a_dx, a_dy, a_axial = _h1_components_3d(
            mesh.a_cross[0], mesh.a_cross[1], mesh.a_axial, Ua,
            lambda X, Y, Z: limit_vec.eval_axial(Z) + 0.0 * (X + Y),
            lambda X, Y, Z: (np.zeros_like(X + Y + Z), np.zeros_like(X + Y + Z),
                             limit_vec.eval_axial_d(Z) + 0.0 * (X + Y)))
        def b_grad(X, Y, Z):
            gx, gy = limit_vec.eval_cross_grad(X, Y)
            zero = np.zeros_like(X + Y + Z)
            return (gx + 0.0 * Z, gy + 0.0 * Z, zero)
        b_val, b_dx, b_dy, b_axial = _h1_components_3d(
            mesh.b_cross[0], mesh.b_cross[1], mesh.b_axial, Ub,
            lambda X, Y, Z: limit_vec.eval_cross(X, Y) + 0.0 * Z,
            b_grad)
        a_cross_total = a_dx + a_dy
        b_cross_total = b_dx + b_dy

    return CorrectorNorms(
        aH1=math.sqrt(a_val + a_cross_total + a_axial),
        bH1=math.sqrt(b_val + b_cross_total + b_axial),
        ga=math.sqrt(a_cross_total) / params.r,
        gb=math.sqrt(b_axial) / params.h,
    )


def cluster_principal_angle(pencil: Pencil, vectors: np.ndarray,
                            limit_vecs, regime: Regime, params: ThinParams) -> float:
    """Largest principal angle between a discrete cluster and the interpolated
    limit eigenspace (reported for multiple eigenvalues, never asserted)."""
    s_b = _slab_scale(regime, params, pencil.dim)
    B = np.stack([pencil.restrict(_interpolant(pencil, v, s_b)) for v in limit_vecs], axis=1)
    def m_orth(X):
        G = X.T @ (pencil.M @ X)
        L = np.linalg.cholesky(0.5 * (G + G.T))
        return np.linalg.solve(L, X.T).T
    A = m_orth(vectors)
    B = m_orth(B)
    sv = np.linalg.svd(A.T @ (pencil.M @ B), compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))


# ---------------------------------------------------------------------------
# study driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeshPolicy:
    """Couples mesh levels to the schedule so discretization error keeps
    shrinking as the thin parameters do: m = max(base, ceil(factor / r))."""

    base: int = 8
    factor: float = 2.0
    grading_ratio: float = 0.5

    def levels(self, r: float) -> MeshLevels:
        m = max(self.base, math.ceil(self.factor / r))
        return MeshLevels(m, m, m)

    def grading(self, geometry: Geometry, m: int, r: float) -> Grading:
        return grading_for(origin_base_width(geometry, m), r, self.grading_ratio)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 500
    block: int = 4
    seed: int = 20240


@dataclass(frozen=True)
class IndexRecord:
    """Everything measured at one schedule index."""

    index: int
    params: ThinParams
    mesh_signature: str
    matches: tuple[MatchEntry, ...]
    bound_ok: tuple[bool, ...]
    orthonormality: float
    correctors: tuple[CorrectorNorms | None, ...]
    cluster_angles: dict
    window_counts: dict
    complete: bool = True
    failure: str = ""


@dataclass(frozen=True)
class StudyReport:
    geometry: Geometry
    regime: Regime
    limit: LimitSpectrum
    records: tuple[IndexRecord, ...]
    rates: dict
    window: float
    K: int

    def errors_for(self, k: int) -> list[float]:
        return [r.matches[k - 1].error for r in self.records if r.complete]


def solve_at(geometry: Geometry, regime: Regime, params: ThinParams,
             limit: LimitSpectrum, K: int, policy: MeshPolicy,
             solver: SolverOptions, window: float, index: int = 0) -> IndexRecord:
    """One schedule point: assemble, solve, match, and measure."""
    levels = policy.levels(params.r)
    grading = policy.grading(geometry, levels.m_omega, params.r)
    mesh = make_mesh(geometry, levels, grading)
    constraints = build_constraints(mesh, params.r)
    pencil = assemble_pencil(mesh, params, constraints)
    spectrum = smallest_eigenpairs(pencil, K, tol=solver.tol,
                                   max_iter=solver.max_iter,
                                   block=solver.block, seed=solver.seed)
    matches = match_spectra(spectrum, limit, K)
    bound_ok = tuple(m.discrete_value <= minmax_bound(m.k) * (1.0 + BOUND_SLACK)
                     for m in matches)
    ortho = orthonormality_check(spectrum, pencil)

    correctors: list[CorrectorNorms | None] = []
    cluster_angles = {}
    for pos, m in enumerate(matches):
        entry = limit.entries[m.entry_index]
        if entry.multiplicity == 1:
            correctors.append(corrector_check(pencil, spectrum.vectors[:, pos],
                                              entry.vectors[0], regime, params))
        else:
            correctors.append(None)
    for idx, entry in enumerate(limit.entries):
        positions = [p for p, m in enumerate(matches) if m.entry_index == idx]
        if entry.multiplicity > 1 and len(positions) == entry.multiplicity:
            cluster_angles[idx] = cluster_principal_angle(
                pencil, spectrum.vectors[:, positions], entry.vectors, regime, params)

    window_counts = {}
    expanded_positions: dict[int, int] = {}
    for m in matches:
        expanded_positions[m.entry_index] = expanded_positions.get(m.entry_index, 0) + 1
    for idx, entry in enumerate(limit.entries):
        if expanded_positions.get(idx, 0) == entry.multiplicity:
            lo = entry.value * (1.0 - window)
            hi = entry.value * (1.0 + window)
            window_counts[idx] = int(np.sum((spectrum.values >= lo)
                                            & (spectrum.values <= hi)))

    return IndexRecord(index, params, mesh.signature(), tuple(matches), bound_ok,
                       ortho, tuple(correctors), cluster_angles, window_counts)


def _failed_record(index, params, exc) -> IndexRecord:
    return IndexRecord(index, params, "", (), (), math.nan, (), {}, {},
                       complete=False, failure=str(exc))


def run_convergence_study(geometry: Geometry, schedule: RegimeSchedule, K: int,
                          policy: MeshPolicy = MeshPolicy(),
                          solver: SolverOptions = SolverOptions(),
                          window: float = 0.02) -> StudyReport:
    """Sweep the schedule, solving each index and fitting empirical rates.

    Solver failures mark their record incomplete and the sweep continues.
    Indices run in parallel when THINSPECTRA_THREADS allows; the reduce is
    ordered, so reports are deterministic either way.
    """
    regime = schedule.regime
    limit = gathered_spectrum(regime, geometry, regime.q, K)
    while len(limit.expand()) < K:
        limit = gathered_spectrum(regime, geometry, regime.q, K + len(limit.entries))

    def work(item):
        i, params = item
        try:
            return solve_at(geometry, regime, params, limit, K, policy, solver,
                            window, index=i)
        except NotConverged as exc:
            return _failed_record(i, params, exc)

    items = list(enumerate(schedule.pairs, start=1))
    threads = int(os.environ.get("THINSPECTRA_THREADS", "1") or "1")
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
            records = list(pool.map(work, items))
    else:
        records = [work(it) for it in items]
    records.sort(key=lambda rec: rec.index)

    rates = {}
    for k in range(1, K + 1):
        pts = [(rec.params.r, rec.matches[k - 1].error)
               for rec in records if rec.complete and rec.matches[k - 1].error > 0.0]
        if len(pts) >= 2:
            lr = np.log([p[0] for p in pts])
            le = np.log([p[1] for p in pts])
            rates[k] = float(np.polyfit(lr, le, 1)[0])
    return StudyReport(geometry, schedule.regime, limit, tuple(records), rates,
                       window, K)
