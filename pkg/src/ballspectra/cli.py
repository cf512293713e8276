"""Command-line entry point: ``ballspectra <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 usage or domain error,
3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import ballcalc, fields, spectral, verification
from .eigenbasis import (CURL, GRADDIV, BallDomain, EigenField, MultiIndex, eigenvalue,
                         enumerate_indices, normalized_record)
from .errors import BallSpectraError
from .specfun import ALPHA, RHO
from .tracing import TraceConfig, run_traces

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_SEEDS = ((0.0, 0.0, 0.5), (0.4, 0.0, 0.2))


class UsageError(Exception):
    pass


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _triple(text: str, what: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise UsageError(f"{what}: expected three values, got {text!r}")
    return vals


def _quadrature(args) -> tuple:
    if args.grid is None:
        return ballcalc.DEFAULT_GRID
    shape = tuple(int(float(v)) for v in _triple(args.grid, "--grid"))
    if min(shape) < 2:
        raise UsageError("--grid: every dimension must be at least 2")
    return shape


# eigs --------------------------------------------------------------------

def eigs_table(operator: str, n_max: int, m_max: int, R: float) -> list[tuple]:
    domain = BallDomain(R)
    return [(i.operator, i.n, i.m, i.k, i.sign_char, eigenvalue(i, domain))
            for i in enumerate_indices(operator, n_max, m_max, domain)]


def cmd_eigs(args) -> int:
    if args.zeros:
        rows = [(t.kind, n, m, v) for t in (RHO, ALPHA)
                for n in range(args.nmax + 1) for m, v in enumerate(t.zeros(n, args.mmax), 1)]
        header = ["kind", "n", "m", "value"]
        if args.format == "json":
            text = _json_text({"schema_version": verification.SCHEMA_VERSION, "zeros": [
                dict(zip(header, r)) for r in rows]})
        else:
            text = _csv_text(header, [(k, n, m, _num(v)) for k, n, m, v in rows])
        _emit(text, args.out)
        return EXIT_OK
    rows = eigs_table(args.operator, args.nmax, args.mmax, args.radius)
    header = ["operator", "n", "m", "k", "sign", "eigenvalue"]
    if args.format == "json":
        text = _json_text({"schema_version": verification.SCHEMA_VERSION, "radius": args.radius,
                           "eigenvalues": [dict(zip(header, r)) for r in rows]})
    else:
        text = _csv_text(header, [r[:5] + (_num(r[5]),) for r in rows])
    _emit(text, args.out)
    return EXIT_OK


# field -------------------------------------------------------------------

def lattice_in_ball(n: int, R: float) -> np.ndarray:
    """Points of ``linspace(-R, R, n)^3`` with |x| < R, in x-major order."""
    axis = np.linspace(-R, R, n)
    pts = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    return pts[np.linalg.norm(pts, axis=1) < R]


def cmd_field(args) -> int:
    idx = MultiIndex.parse(args.index)
    n = 21 if args.grid is None else int(args.grid)
    if n < 2:
        raise UsageError("--grid: lattice needs at least 2 points per axis")
    pts = lattice_in_ball(n, args.radius)
    f = EigenField(normalized_record(idx, args.radius))
    vals = f(pts) if len(pts) else np.zeros((0, 3))
    header = ["x", "y", "z", "ux", "uy", "uz"]
    if args.format == "json":
        text = _json_text({"schema_version": verification.SCHEMA_VERSION, "index": idx.label(),
                           "radius": args.radius, "lattice": n,
                           "samples": [list(map(float, p)) + list(map(float, v))
                                       for p, v in zip(pts, vals)]})
    else:
        text = _csv_text(header, [[_num(x) for x in (*p, *v)] for p, v in zip(pts, vals)])
    _emit(text, args.out)
    return EXIT_OK


# verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = verification.VerifyConfig(R=args.radius, h=args.step, seed=args.seed, order=args.order,
                                    grid=_quadrature(args), lambda_scale=args.lambda_scale)
    if args.nmax is not None:
        cfg.curl_n_max = args.nmax
    if args.mmax is not None:
        cfg.curl_m_max = args.mmax
    report = verification.run(args.suite, cfg)
    _emit(_json_text(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_FAILED


# project -----------------------------------------------------------------

def _input_field(args):
    if args.field_file:
        return fields.SampledField.from_csv(args.field_file), args.field_file
    name = args.field or "composite"
    return fields.resolve(name, args.radius), name


def projection_report(f, trunc: spectral.Truncation, grid_shape, R: float) -> tuple:
    domain = BallDomain(R)
    grid = ballcalc.QuadratureGrid(R, *grid_shape)
    coeffs = spectral.analyze(f, trunc, grid, domain)
    samples = ballcalc.sample(f, grid)
    recon = ballcalc.sample(spectral.synthesize(coeffs, grid_shape), grid)
    diff = samples - recon
    total = ballcalc.inner_product_sampled(samples, samples, grid)
    e_a = sum(v * v for v in coeffs.a.values())
    e_v = sum(v * v for v in coeffs.b.values())
    summary = {
        "l2_input": math.sqrt(max(total, 0.0)),
        "l2_residual": math.sqrt(max(ballcalc.inner_product_sampled(diff, diff, grid), 0.0)),
        "potential_energy": e_a,
        "vortex_energy": e_v,
        "potential_fraction": e_a / total if total > 0 else 0.0,
    }
    return coeffs, summary


def cmd_project(args) -> int:
    f, name = _input_field(args)
    trunc = spectral.Truncation.parse(args.trunc)
    coeffs, summary = projection_report(f, trunc, _quadrature(args), args.radius)
    if args.format == "csv":
        _emit(coeffs.to_csv(), args.out)
        sys.stderr.write(_json_text(summary))
    else:
        _emit(_json_text({"schema_version": spectral.SCHEMA_VERSION, "field": name,
                          "fields_version": fields.BUILTIN_FIELDS_VERSION,
                          "radius": args.radius, "truncation": [trunc.n_max, trunc.m_max],
                          "grid": list(_quadrature(args)), **summary,
                          "coefficients": coeffs.to_records()}), args.out)
    return EXIT_OK


# solve -------------------------------------------------------------------

def parse_rhs(text: str, operator: str, trunc: spectral.Truncation, domain: BallDomain,
              seed: int) -> spectral.SpectralCoefficients:
    """Right-hand sides: ``idx=val;idx=val``, ``random:N`` or ``@file.json``."""
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return spectral.SpectralCoefficients.from_json(fh.read())
    base = spectral.zeros(trunc, domain)
    if text.startswith("random:"):
        count = int(text.split(":", 1)[1])
        pool = list(base.a if operator == GRADDIV else base.b)
        if not 0 < count <= len(pool):
            raise UsageError(f"random:{count}: need 1..{len(pool)} indices for {trunc}")
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(pool), size=count, replace=False)
        values = {pool[i]: float(rng.normal()) for i in sorted(chosen)}
    else:
        values = {}
        for item in filter(None, (s.strip() for s in text.split(";"))):
            key, _, val = item.rpartition("=")
            if not key:
                raise UsageError(f"rhs entry {item!r}: expected index=value")
            values[MultiIndex.parse(key)] = float(val)
    a = {**base.a, **{i: v for i, v in values.items() if i.operator == GRADDIV}}
    b = {**base.b, **{i: v for i, v in values.items() if i.operator == CURL}}
    return base.with_parts(a, b)


def cmd_solve(args) -> int:
    operator = GRADDIV if args.equation == "graddiv_power" else CURL
    domain = BallDomain(args.radius)
    trunc = spectral.Truncation.parse(args.trunc)
    rhs = parse_rhs(args.rhs, operator, trunc, domain, args.seed)
    if operator == GRADDIV:
        sol = spectral.solve_graddiv_power(rhs, args.power)
    else:
        sol = spectral.solve_curl_power(rhs, args.power)
    if args.format == "csv":
        _emit(sol.solution.to_csv(), args.out)
        sys.stderr.write(_json_text({"dual_norm": sol.dual_norm.value, "residual": sol.residual}))
    else:
        _emit(_json_text({"schema_version": spectral.SCHEMA_VERSION, "equation": args.equation,
                          "power": args.power, "seed": args.seed, "radius": args.radius,
                          "truncation": [trunc.n_max, trunc.m_max],
                          "dual_norm": {"scale": sol.dual_norm.scale, "order": sol.dual_norm.order,
                                        "value": sol.dual_norm.value},
                          "residual": sol.residual,
                          "solution": sol.solution.to_records()}), args.out)
    return EXIT_OK


# trace -------------------------------------------------------------------

def trace_diagnostics(traces) -> list[dict]:
    out = []
    for i, tr in enumerate(traces):
        pts = tr.points
        out.append({
            "trace_id": i,
            "seed": [float(v) for v in pts[0]],
            "steps": len(pts) - 1,
            "stop_reason": tr.stop_reason,
            "max_radius": float(np.max(np.linalg.norm(pts, axis=1))),
            "max_offaxis": float(np.max(np.abs(pts[:, 0]) + np.abs(pts[:, 1]))),
            "flux_initial": None if tr.flux is None else float(tr.flux[0]),
            "flux_max_rel_drift": None if tr.flux is None else tr.flux_drift(),
        })
    return out


def cmd_trace(args) -> int:
    seeds = [_triple(p, "--point") for p in args.point] if args.point else list(DEFAULT_SEEDS)
    idx = MultiIndex.parse(args.index) if args.index else MultiIndex(1, 1, 0, CURL, 1)
    cfg = TraceConfig(seeds, step=1e-3 if args.step is None else args.step,
                      max_steps=args.max_steps, R=args.radius, index=idx)
    traces = run_traces(cfg)
    diag = {"schema_version": verification.SCHEMA_VERSION, "index": idx.label(),
            "step": cfg.step, "max_steps": cfg.max_steps, "radius": cfg.R,
            "traces": trace_diagnostics(traces)}
    if args.format == "json":
        diag["polylines"] = [{"trace_id": i, "s": tr.arclength.tolist(),
                              "points": tr.points.tolist()} for i, tr in enumerate(traces)]
        _emit(_json_text(diag), args.out)
        return EXIT_OK
    rows = [(i, _num(s), *map(_num, p)) for i, tr in enumerate(traces)
            for s, p in zip(tr.arclength, tr.points)]
    _emit(_csv_text(["trace_id", "s", "x", "y", "z"], rows), args.out)
    diag_path = args.diag or (args.out + ".diag.json" if args.out and args.out != "-" else None)
    if diag_path:
        _emit(_json_text(diag), diag_path)
    else:
        sys.stderr.write(_json_text(diag))
    return EXIT_OK


# parser ------------------------------------------------------------------

def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--radius", type=_positive, default=1.0, help="ball radius R")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, default=ballcalc.DEFAULT_SEED)

    p = argparse.ArgumentParser(prog="ballspectra",
                                description="Spectra of curl and grad div on a ball.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eigs", parents=[common], help="eigenvalue table")
    e.add_argument("--operator", choices=(CURL, GRADDIV), default=CURL)
    e.add_argument("--nmax", type=int, default=1)
    e.add_argument("--mmax", type=int, default=1)
    e.add_argument("--zeros", action="store_true", help="emit Bessel zero tables instead")
    e.set_defaults(func=cmd_eigs, default_format="csv")

    f = sub.add_parser("field", parents=[common], help="sample an eigenfield on a lattice")
    f.add_argument("--index", required=True, help="e.g. curl:1,1,0,+ or graddiv:1,1,0")
    f.add_argument("--grid", help="lattice points per axis (default 21)")
    f.set_defaults(func=cmd_field, default_format="csv")

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", choices=("eigen", "basis", "operators", "all"), default="all")
    v.add_argument("--step", type=_positive, default=None, help="finite-difference step")
    v.add_argument("--order", type=int, choices=(2, 4, 6), default=6)
    v.add_argument("--grid", help="quadrature shape nr,ntheta,nphi")
    v.add_argument("--nmax", type=int, default=None, help="curl degree bound (default 3)")
    v.add_argument("--mmax", type=int, default=None, help="curl zero-index bound (default 3)")
    v.add_argument("--lambda-scale", type=float, default=1.0,
                   help="multiply tested eigenvalues (fault injection)")
    v.set_defaults(func=cmd_verify, default_format="json")

    pr = sub.add_parser("project", parents=[common], help="Helmholtz projection of a field")
    src = pr.add_mutually_exclusive_group()
    src.add_argument("--field", help=f"built-in field: {', '.join(fields.BUILTIN)} or eigen:<index>")
    src.add_argument("--field-file", help="CSV with columns x,y,z,ux,uy,uz")
    pr.add_argument("--trunc", default="4,4", help="n_max,m_max")
    pr.add_argument("--grid", help="quadrature shape nr,ntheta,nphi")
    pr.set_defaults(func=cmd_project, default_format="json")

    s = sub.add_parser("solve", parents=[common], help="solve a power equation spectrally")
    s.add_argument("--equation", choices=("graddiv_power", "curl_power"), required=True)
    s.add_argument("--power", type=int, default=1, help="k for graddiv_power, m for curl_power")
    s.add_argument("--rhs", required=True, help="'idx=val;...', 'random:N' or '@file.json'")
    s.add_argument("--trunc", default="4,4")
    s.set_defaults(func=cmd_solve, default_format="json")

    t = sub.add_parser("trace", parents=[common], help="trace field lines with RK4")
    t.add_argument("--index", help="eigenfield index (default curl:1,1,0,+)")
    t.add_argument("--point", action="append", help="seed x,y,z (repeatable)")
    t.add_argument("--step", type=_positive, default=None)
    t.add_argument("--max-steps", type=int, default=10_000)
    t.add_argument("--diag", help="diagnostics JSON path (CSV mode)")
    t.set_defaults(func=cmd_trace, default_format="csv")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except OSError as exc:
        sys.stderr.write(f"ballspectra: {exc}\n")
        return EXIT_IO
    except (UsageError, BallSpectraError, ValueError, TypeError) as exc:
        sys.stderr.write(f"ballspectra: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
