"""Study configuration: a line-oriented `key = value` format with sections."""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .errors import ConfigError
from .geometry import FINITE, INFINITE, ZERO, Geometry, Regime, make_geometry
from .study import MeshPolicy, SolverOptions


@dataclass(frozen=True)
class StudyConfig:
    dim: int = 2
    omega: tuple[float, ...] = (-1.0, 1.0)
    regime: str = FINITE
    q: float | None = 1.0
    r0: float = 0.5
    rho: float = 0.5
    count: int = 4
    k: int = 4
    window: float = 0.02
    mesh: MeshPolicy = field(default_factory=MeshPolicy)
    solver: SolverOptions = field(default_factory=SolverOptions)
    out_dir: str = "out"

    def geometry(self) -> Geometry:
        return make_geometry(self.dim, self.omega)

    def regime_obj(self) -> Regime:
        if self.regime == FINITE:
            return Regime.finite(self.q)
        return Regime.zero() if self.regime == ZERO else Regime.infinite()


def _get(parser, section, key, cast, default=None, required=False):
    dotted = f"{section}.{key}"
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(dotted, "required")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(dotted, f"cannot parse {raw!r}") from exc


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.replace(",", " ").split())


def parse_config(text: str) -> StudyConfig:
    """Parse and validate study configuration text."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"unparseable: {exc}") from exc

    dim = _get(parser, "geometry", "dim", int, default=2)
    if dim not in (2, 3):
        raise ConfigError("geometry.dim", "must be 2 or 3")
    omega = _get(parser, "geometry", "omega", _floats, required=True)
    if len(omega) != 2:
        raise ConfigError("geometry.omega", "needs exactly two numbers")
    if dim == 2 and not (omega[0] < 0.0 < omega[1]):
        raise ConfigError("geometry.omega", "interval must satisfy c < 0 < d")
    if dim == 3 and min(omega) <= 0.0:
        raise ConfigError("geometry.omega", "half-widths must be positive")

    regime = _get(parser, "schedule", "regime", str, required=True).strip().lower()
    if regime not in (FINITE, ZERO, INFINITE):
        raise ConfigError("schedule.regime", f"unknown regime {regime!r}")
    q = _get(parser, "schedule", "q", float)
    if regime == FINITE:
        if q is None:
            raise ConfigError("schedule.q", "required")
        if q <= 0.0:
            raise ConfigError("schedule.q", "must be positive")
    r0 = _get(parser, "schedule", "r0", float, default=0.5)
    rho = _get(parser, "schedule", "rho", float, default=0.5)
    count = _get(parser, "schedule", "count", int, default=4)
    if not 0.0 < r0 < 1.0:
        raise ConfigError("schedule.r0", "must lie in (0, 1)")
    if not 0.0 < rho < 1.0:
        raise ConfigError("schedule.rho", "must lie in (0, 1)")
    if count < 1:
        raise ConfigError("schedule.count", "must be >= 1")

    k = _get(parser, "study", "k", int, default=4)
    if k < 1:
        raise ConfigError("study.k", "must be >= 1")
    window = _get(parser, "study", "window", float, default=0.02)
    if not 0.0 < window < 1.0:
        raise ConfigError("study.window", "must lie in (0, 1)")

    base = _get(parser, "mesh", "base", int, default=8)
    factor = _get(parser, "mesh", "factor", float, default=2.0)
    ratio = _get(parser, "mesh", "grading_ratio", float, default=0.5)
    if base < 1:
        raise ConfigError("mesh.base", "must be >= 1")
    if factor <= 0.0:
        raise ConfigError("mesh.factor", "must be positive")
    if not 0.0 < ratio <= 1.0:
        raise ConfigError("mesh.grading_ratio", "must lie in (0, 1]")

    tol = _get(parser, "solver", "tol", float, default=1e-10)
    max_iter = _get(parser, "solver", "max_iter", int, default=500)
    block = _get(parser, "solver", "block", int, default=4)
    seed = _get(parser, "solver", "seed", int, default=20240)
    if tol <= 0.0:
        raise ConfigError("solver.tol", "must be positive")
    if max_iter < 1:
        raise ConfigError("solver.max_iter", "must be >= 1")
    if block < 1:
        raise ConfigError("solver.block", "must be >= 1")

    out_dir = _get(parser, "output", "directory", str, default="out").strip()

    return StudyConfig(dim, omega, regime, q, r0, rho, count, k, window,
                       MeshPolicy(base, factor, ratio),
                       SolverOptions(tol, max_iter, block, seed), out_dir)


def serialize_config(cfg: StudyConfig) -> str:
    """Config text whose parse is semantically equal to cfg."""
    parser = configparser.ConfigParser()
    parser["geometry"] = {"dim": str(cfg.dim),
                          "omega": ", ".join(format(v, ".17g") for v in cfg.omega)}
    sched = {"regime": cfg.regime, "r0": format(cfg.r0, ".17g"),
             "rho": format(cfg.rho, ".17g"), "count": str(cfg.count)}
    if cfg.regime == FINITE:
        sched["q"] = format(cfg.q, ".17g")
    parser["schedule"] = sched
    parser["study"] = {"k": str(cfg.k), "window": format(cfg.window, ".17g")}
    parser["mesh"] = {"base": str(cfg.mesh.base),
                      "factor": format(cfg.mesh.factor, ".17g"),
                      "grading_ratio": format(cfg.mesh.grading_ratio, ".17g")}
    parser["solver"] = {"tol": format(cfg.solver.tol, ".17g"),
                        "max_iter": str(cfg.solver.max_iter),
                        "block": str(cfg.solver.block),
                        "seed": str(cfg.solver.seed)}
    parser["output"] = {"directory": cfg.out_dir}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
