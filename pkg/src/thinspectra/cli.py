"""Command-line front end: limit | solve | study | verify."""

from __future__ import annotations

import argparse
import csv
import math
import os
import re
import sys

import numpy as np

from . import acceptance
from .assembly import assemble_pencil, build_constraints
from .config import StudyConfig, parse_config
from .eigensolve import dense_oracle, smallest_eigenpairs
from .errors import ConfigError, ThinSpectraError
from .geometry import (FINITE, INFINITE, ZERO, Grading, MeshLevels, Regime,
                       ThinParams, grading_for, make_geometry, make_mesh,
                       make_schedule, origin_base_width)
from .limit_spectra import gathered_spectrum
from .study import (minmax_bound, orthonormality_check, run_convergence_study)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BOUND = 4

_NINE = ".9g"


def _fmt(v: float) -> str:
    return format(v, _NINE)


def _parse_pair(raw: str, key: str) -> tuple[float, float]:
    try:
        parts = tuple(float(p) for p in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}")
    if len(parts) != 2:
        raise ConfigError(key, "needs exactly two numbers")
    return parts


def _geometry_from(args):
    if args.omega is None:
        raise ConfigError("omega", "required")
    return make_geometry(args.dim, _parse_pair(args.omega, "omega"))


def _regime_from(args) -> Regime:
    if args.regime is None:
        raise ConfigError("regime", "required")
    kind = args.regime.strip().lower()
    if kind == FINITE:
        if args.q is None:
            raise ConfigError("q", "required for the finite regime")
        return Regime.finite(args.q)
    if kind == ZERO:
        return Regime.zero()
    if kind == INFINITE:
        return Regime.infinite()
    raise ConfigError("regime", f"unknown regime {kind!r}")


def cmd_limit(args) -> int:
    geometry = _geometry_from(args)
    regime = _regime_from(args)
    spectrum = gathered_spectrum(regime, geometry, regime.q, args.count)
    rows = [(e.value, e.multiplicity, "+".join(sorted(e.tags)))
            for e in spectrum.entries]
    for value, mult, tags in rows:
        print(f"{_fmt(value)}({mult}) {tags}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value", "multiplicity", "branches"])
            for value, mult, tags in rows:
                writer.writerow([_fmt(value), mult, tags])
    return EXIT_OK


def cmd_solve(args) -> int:
    geometry = _geometry_from(args)
    if args.r is None or args.h is None:
        raise ConfigError("r" if args.r is None else "h", "required")
    params = ThinParams(args.r, args.h)
    if args.levels:
        trip = args.levels.split(",")
        if len(trip) != 3:
            raise ConfigError("levels", "needs m_omega,m_a,m_b")
        levels = MeshLevels(*(int(p) for p in trip))
    else:
        m = max(8, math.ceil(2.0 / params.r))
        levels = MeshLevels(m, m, m)
    grading = grading_for(origin_base_width(geometry, levels.m_omega), params.r)
    mesh = make_mesh(geometry, levels, grading)
    pencil = assemble_pencil(mesh, params, build_constraints(mesh, params.r))
    try:
        if args.oracle:
            full = dense_oracle(pencil)
            values = full.values[:args.k]
            residuals = full.residuals[:args.k]
            gram_dev = float(np.abs(full.mass_gram[:args.k, :args.k]
                                    - np.eye(args.k)).max())
        else:
            spec = smallest_eigenpairs(pencil, args.k, tol=args.tol)
            values, residuals = spec.values, spec.residuals
            gram_dev = orthonormality_check(spec, pencil)
    except ThinSpectraError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for k, (lam, res) in enumerate(zip(values, residuals), start=1):
        print(f"lambda_{k} = {_fmt(lam)}  residual {res:.3e}")
    print(f"orthonormality deviation {gram_dev:.3e}")
    print(f"mesh {mesh.signature()}  dofs {pencil.order}")
    for k, lam in enumerate(values, start=1):
        if lam > minmax_bound(k) * (1.0 + 1e-12):
            print(f"BOUND_VIOLATION lambda_{k} = {_fmt(lam)} > "
                  f"{_fmt(minmax_bound(k))}", file=sys.stderr)
            return EXIT_BOUND
    return EXIT_OK


def _write_report_csv(path: str, report) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "r", "h", "k", "lambda_n_k", "lambda_limit",
                         "error", "aH1", "bH1", "ga", "gb", "bound_ok"])
        for rec in report.records:
            if not rec.complete:
                continue
            for pos, m in enumerate(rec.matches):
                cn = rec.correctors[pos]
                cells = ["" if cn is None else _fmt(getattr(cn, f))
                         for f in ("aH1", "bH1", "ga", "gb")]
                writer.writerow([rec.index, _fmt(rec.params.r), _fmt(rec.params.h),
                                 m.k, _fmt(m.discrete_value), _fmt(m.limit_value),
                                 _fmt(m.error), *cells,
                                 int(rec.bound_ok[pos])])


def _write_rates_csv(path: str, report) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "rate"])
        for k in sorted(report.rates):
            writer.writerow([k, _fmt(report.rates[k])])


def cmd_study(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    geometry = cfg.geometry()
    schedule = make_schedule(cfg.regime_obj(), geometry, cfg.r0, cfg.rho, cfg.count)
    try:
        report = run_convergence_study(geometry, schedule, cfg.k, cfg.mesh,
                                       cfg.solver, cfg.window)
    except ThinSpectraError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    _write_report_csv(os.path.join(out_dir, "report.csv"), report)
    _write_rates_csv(os.path.join(out_dir, "rates.csv"), report)
    if args.emit_svg:
        from .svgplot import loglog_chart
        series = {f"k={k}": [(rec.params.r, rec.matches[k - 1].error)
                             for rec in report.records if rec.complete]
                  for k in range(1, cfg.k + 1)}
        with open(os.path.join(out_dir, "plot.svg"), "w") as fh:
            fh.write(loglog_chart(series, "r", "matched error",
                                  f"{cfg.regime} regime"))
    incomplete = [rec.index for rec in report.records if not rec.complete]
    for idx in incomplete:
        rec = report.records[idx - 1]
        print(f"warning: index {idx} incomplete: {rec.failure}", file=sys.stderr)
    print(f"wrote {out_dir}/report.csv, {out_dir}/rates.csv"
          + (f", {out_dir}/plot.svg" if args.emit_svg else ""))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = acceptance.run_criteria(args.filter or "")
    width = max(len(r.ident) for r in results) if results else 10
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_ok &= r.passed
        print(f"{r.ident:<{width}}  {status}  {r.seconds:7.2f}s  {r.detail}")
    if not results:
        print(f"no criteria match filter {args.filter!r}", file=sys.stderr)
        return EXIT_FAIL
    print("RESULT: " + ("PASS" if all_ok else "FAIL"))
    return EXIT_OK if all_ok else EXIT_FAIL


# lets argparse accept values like "-1,1" after --omega
_NEGATIVE_PAIR = re.compile(r"^-[0-9.,eE+-]+$")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thinspectra",
        description="Spectral verification of the thin two-cylinder multidomain")
    parser._negative_number_matcher = _NEGATIVE_PAIR
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("limit", help="print exact limit eigenvalues")
    p._negative_number_matcher = _NEGATIVE_PAIR
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--omega", help="c,d (dim 2) or wx,wy (dim 3)")
    p.add_argument("--regime", help="finite | zero | infinite")
    p.add_argument("--q", type=float)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--csv", help="also write rows to this CSV file")
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("solve", help="solve one finite-parameter eigenproblem")
    p._negative_number_matcher = _NEGATIVE_PAIR
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--omega")
    p.add_argument("--r", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--levels", help="m_omega,m_a,m_b (default: policy from r)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--oracle", action="store_true",
                   help="use the dense eigendecomposition instead")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="run a convergence study from a config file")
    p.add_argument("--config", required=False)
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--emit-svg", action="store_true")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--filter", help="only criteria whose name contains this")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "study" and not args.config:
        print("config: required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except ThinSpectraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
