"""Batch command-line front end.

Subcommands cover metric checks, threshold scans, integrand and
ellipticity scans, graph solves, inequality verification, and the Funk
round trip.  Reports are JSON (sorted keys), grids are CSV; outputs are
byte-identical across runs for a fixed configuration and seed.

Exit codes: 0 success, 1 verdict failure (e.g. metric not Finsler,
inequality violated, solver stuck), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import cartan as _cartan
from . import graphsolver as _graph
from . import meshes as _meshes
from . import metrics as _metrics
from . import radon as _radon
from . import surfaces as _surfaces
from .errors import FinslerError

_CONFIG_KEYS = {"metric", "grid", "quad", "tol", "out", "seed", "family", "m",
                "b", "kind", "epsilon", "samples", "which", "mesh", "boundary",
                "band", "n_witness", "hessian"}


class UsageError(Exception):
    pass


def _load_metric(args) -> _metrics.MetricSpec:
    if getattr(args, "metric", None):
        text = args.metric
        path = Path(text)
        if path.exists():
            text = path.read_text()
        try:
            return _metrics.from_json(text)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad metric spec: {exc}") from exc
    kind = getattr(args, "kind", None)
    if kind is None:
        raise UsageError("provide --metric JSON or --kind")
    payload = {"kind": kind, "dim": 3, "params": {}}
    if getattr(args, "b", None):
        payload["params"]["b"] = [float(t) for t in args.b.split(",")]
        payload["dim"] = len(payload["params"]["b"])
    if getattr(args, "epsilon", None) is not None:
        payload["params"]["epsilon"] = args.epsilon
    try:
        return _metrics.from_json(json.dumps(payload))
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad metric parameters: {exc}") from exc


def _write_json(args, name, payload) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _write_csv(args, name, header, rows) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in row])
    return path


def _print(args, text):
    if not getattr(args, "quiet", False):
        print(text)


def _selftest(name, checks, args) -> int:
    failures = 0
    for label, fn in checks:
        try:
            ok = bool(fn())
        except Exception as exc:  # a selftest must never crash the CLI
            ok = False
            label = f"{label} ({type(exc).__name__}: {exc})"
        failures += (not ok)
        _print(args, f"selftest {name}: {label}: {'PASS' if ok else 'FAIL'}")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_metric(args) -> int:
    if args.selftest:
        E = _metrics.euclidean(3)
        return _selftest("check-metric", [
            ("euclidean norm of (3,4,0) is 5",
             lambda: abs(_metrics.eval_metric(E, None, [3, 4, 0]) - 5.0) < 1e-12),
            ("euclidean verdict finsler",
             lambda: _metrics.check_validity(E, 2, 32).verdict == "finsler"),
            ("euclidean extremes equal one",
             lambda: abs(_metrics.check_validity(E, 2, 32).f_min - 1.0) < 1e-12),
        ], args)
    spec = _load_metric(args)
    m = spec.dim - 1
    if args.ga:
        report = _metrics.check_ga(spec, m, args.grid)
        payload = report.to_dict()
        verdict = report.verdict
    else:
        report = _metrics.check_validity(spec, m, args.grid)
        payload = report.to_dict()
        verdict = report.verdict
    payload["metric"] = json.loads(spec.to_json()) if spec.kind in _metrics.ZOO_KINDS \
        else {"kind": spec.kind, "name": spec.name}
    path = _write_json(args, "check_metric_report", payload)
    _print(args, f"verdict: {verdict} (report: {path})")
    return 0 if verdict == "finsler" else 1


def cmd_symmetrize(args) -> int:
    if args.selftest:
        E = _metrics.euclidean(3)
        sym = _metrics.symmetrize(E, 2)
        pts = _metrics.sphere_grid(2, 24)
        return _selftest("symmetrize", [
            ("reversible metric is a fixed point",
             lambda: float(np.max(np.abs(sym._eval(None, pts)
                                         - E._eval(None, pts)))) < 1e-12),
            ("result is even",
             lambda: float(np.max(np.abs(sym._eval(None, pts)
                                         - sym._eval(None, -pts)))) < 1e-12),
        ], args)
    spec = _load_metric(args)
    m = spec.dim - 1
    sym = _metrics.symmetrize(spec, m)
    pts = _metrics.sphere_grid(m, args.grid)
    fwd = spec._eval(None, pts)
    sval = sym._eval(None, pts)
    even_defect = float(np.max(np.abs(sval - sym._eval(None, -pts))))
    payload = {
        "m": m,
        "even_defect": even_defect,
        "f_min": float(np.min(fwd)), "f_max": float(np.max(fwd)),
        "sym_min": float(np.min(sval)), "sym_max": float(np.max(sval)),
    }
    _write_csv(args, "symmetrize_grid",
               [f"y{i + 1}" for i in range(spec.dim)] + ["F", "F_sym"],
               (list(map(float, p)) + [float(a), float(b)]
                for p, a, b in zip(pts, fwd, sval)))
    path = _write_json(args, "symmetrize_report", payload)
    _print(args, f"symmetrized (report: {path})")
    return 0


def cmd_threshold_scan(args) -> int:
    if args.selftest:
        return _selftest("threshold-scan", [
            ("euclidean passes the symmetrization check",
             lambda: _metrics.check_ga(_metrics.euclidean(3), 2, 32).verdict
             == "finsler"),
            ("strong drift fails the symmetrization check",
             lambda: _metrics.check_ga(_metrics.randers([0, 0, 0.8]), 2, 32).verdict
             != "finsler"),
        ], args)
    try:
        value = _metrics.bisect_threshold(args.family, args.m, tol=args.tol,
                                          grid_resolution=args.grid)
    except FinslerError as exc:
        _print(args, f"scan failed: {exc}")
        return 1
    payload = {"family": args.family, "m": args.m, "threshold": value,
               "tol": args.tol, "grid": args.grid}
    path = _write_json(args, "threshold_report", payload)
    _print(args, f"threshold |b|* = {value:.5f} (report: {path})")
    return 0


def _axis_rows(spec, N, with_hessian):
    dim = spec.dim
    rows = []
    axes = [e for i in range(dim) for e in (np.eye(dim)[i], -np.eye(dim)[i])]
    for Z in axes:
        val = _cartan.area_integrand(spec, None, Z, N)
        row = [float(z) + 0.0 for z in Z] + [val]
        if with_hessian:
            _, l1, l2 = _cartan.area_hessian(spec, None, Z, N)
            row += [l1, l2]
        rows.append(row)
    return rows


def cmd_integrand_scan(args) -> int:
    if args.selftest:
        E = _metrics.euclidean(3)
        return _selftest("integrand-scan", [
            ("euclidean integrand is the norm",
             lambda: abs(_cartan.area_integrand(E, None, [0.3, -0.4, 1.2])
                         - np.linalg.norm([0.3, -0.4, 1.2])) < 1e-12),
            ("integrand is 1-homogeneous",
             lambda: abs(_cartan.area_integrand(E, None, [0.6, -0.8, 2.4])
                         - 2.0 * _cartan.area_integrand(E, None, [0.3, -0.4, 1.2]))
             < 1e-12),
        ], args)
    spec = _load_metric(args)
    m = spec.dim - 1
    Zs = _metrics.sphere_grid(m, args.grid)
    vals = _cartan.area_integrand_many(spec, None, Zs, args.quad)
    rows = _axis_rows(spec, args.quad, False)
    rows += [list(map(float, Z)) + [float(v)] for Z, v in zip(Zs, vals)]
    header = [f"Z{i + 1}" for i in range(spec.dim)] + ["area_integrand"]
    path = _write_csv(args, "integrand_scan", header, rows)
    _write_json(args, "integrand_scan_report", {
        "metric": spec.name, "grid": args.grid, "quad": args.quad or 0,
        "min": float(np.min(vals)), "max": float(np.max(vals)),
        "rows": len(rows)})
    _print(args, f"scan written to {path}")
    return 0


def cmd_ellipticity_scan(args) -> int:
    if args.selftest:
        E = _metrics.euclidean(3)
        return _selftest("ellipticity-scan", [
            ("euclidean tangential eigenvalues are one",
             lambda: abs(_cartan.area_hessian(E, None, [0.0, 0.3, 1.0])[1] - 1.0)
             < 1e-6),
        ], args)
    spec = _load_metric(args)
    scan = _cartan.ellipticity_scan(spec, grid_resolution=args.grid, N=args.quad)
    header = [f"Z{i + 1}" for i in range(spec.dim)] + \
        ["area_integrand", "lambda1", "lambda2"]
    path = _write_csv(args, "ellipticity_scan", header,
                      ([float(v) for v in row] for row in scan.rows()))
    _write_json(args, "ellipticity_scan_report", scan.to_dict())
    _print(args, f"lambda range [{scan.lambda_min:.6f}, {scan.lambda_max:.6f}] "
           f"(grid: {path})")
    return 0 if scan.lambda_min > 0.0 else 1


def _build_mesh(text: str):
    kind, _, arg = text.partition(":")
    if kind == "disk":
        return _meshes.disk_mesh(int(arg or 24))
    if kind == "square":
        return _meshes.unit_square_mesh(int(arg or 40))
    path = Path(text)
    if path.exists():
        payload = json.loads(path.read_text())
        return _meshes.make_mesh(np.asarray(payload["vertices"], dtype=float),
                                 np.asarray(payload["triangles"], dtype=int))
    raise UsageError(f"unknown mesh {text!r} (use disk:R, square:N, or a JSON file)")


def _build_boundary(text: str):
    kind, _, arg = text.partition(":")
    if kind == "affine":
        a1, a2, c = (float(t) for t in arg.split(","))
        return lambda uv: uv[:, 0] * a1 + uv[:, 1] * a2 + c
    if kind == "sine":
        amp = float(arg or 0.3)
        return lambda uv: amp * np.sin(2.0 * np.pi * uv[:, 0]) * (1 + uv[:, 1])
    if kind == "cosine_wave":
        amp = float(arg or 0.3)
        return lambda uv: amp * np.cos(3.0 * np.arctan2(uv[:, 1], uv[:, 0]))
    path = Path(text)
    if path.exists():
        table = np.loadtxt(path, delimiter=",")
        def lookup(uv):
            out = np.empty(len(uv))
            for i, p in enumerate(uv):
                j = np.argmin(np.sum((table[:, :2] - p) ** 2, axis=1))
                out[i] = table[j, 2]
            return out
        return lookup
    raise UsageError(f"unknown boundary {text!r}")


def cmd_solve_graph(args) -> int:
    if args.selftest:
        E = _metrics.euclidean(3)
        mesh = _meshes.unit_square_mesh(8)
        prob = _graph.GraphProblem(mesh=mesh,
                                   boundary_values=np.zeros(mesh.n_vertices),
                                   metric=E)
        return _selftest("solve-graph", [
            ("flat data keeps unit energy",
             lambda: abs(_graph.discrete_energy(prob, np.zeros(mesh.n_vertices))
                         - 1.0) < 1e-12),
            ("flat data is already minimal",
             lambda: _graph.solve(prob, initial="zero").iterations == 0),
        ], args)
    spec = _load_metric(args)
    mesh = _build_mesh(args.mesh)
    boundary = _build_boundary(args.boundary)
    prob = _graph.GraphProblem.from_function(mesh, boundary, spec,
                                             quad_order=args.quad or 128,
                                             tol=args.tol)
    try:
        sol = _graph.solve(prob, initial=args.initial)
    except FinslerError as exc:
        _print(args, f"solve failed: {exc}")
        return 1
    _write_csv(args, "graph_solution", ["u1", "u2", "f"],
               ([float(p[0]), float(p[1]), float(v)]
                for p, v in zip(mesh.vertices, sol.f)))
    payload = {"energy": sol.energy, "iterations": sol.iterations,
               "residual": sol.gradient_norm,
               "n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
               "max_principle": _graph.maximum_principle_check(sol).to_dict()}
    path = _write_json(args, "graph_solution_report", payload)
    _print(args, f"energy {sol.energy:.10f} in {sol.iterations} iterations "
           f"(report: {path})")
    return 0


def cmd_verify_isop(args) -> int:
    if args.selftest:
        E = _metrics.euclidean(3)

        def flat_disk():
            grid = np.linspace(0, 1, 65)
            ang = np.linspace(0, 2 * np.pi, 65)
            patch = _surfaces.ImmersedPatch.from_grid(
                lambda U, V: np.stack([U * np.cos(V), U * np.sin(V),
                                       np.zeros_like(U)], axis=-1),
                grid, ang, boundary=[_surfaces.CurveSample.circle(n=256)])
            return patch
        return _selftest("verify-isop", [
            ("flat disk satisfies the ball bound",
             lambda: _surfaces.verify_isoperimetric(flat_disk(), E, "isop1",
                                                    a=np.zeros(3)).holds),
            ("flat disk stays in its boundary hull",
             lambda: _surfaces.convex_hull_check(flat_disk()).max_violation
             < 1e-9),
        ], args)
    spec = _load_metric(args)
    mesh = _build_mesh(args.mesh)
    boundary = _build_boundary(args.boundary)
    prob = _graph.GraphProblem.from_function(mesh, boundary, spec,
                                             quad_order=args.quad or 128,
                                             tol=args.tol)
    try:
        sol = _graph.solve(prob, initial="affine_fit")
    except FinslerError as exc:
        _print(args, f"solve failed: {exc}")
        return 1
    patch = _surfaces.ImmersedPatch.from_graph_solution(sol)
    reports = {w: _surfaces.verify_isoperimetric(patch, spec, w).to_dict()
               for w in (("isop1", "isop2") if args.which == "both"
                         else (args.which,))}
    hull = _surfaces.convex_hull_check(patch).to_dict()
    payload = {"inequalities": reports, "convex_hull": hull,
               "energy": sol.energy, "iterations": sol.iterations}
    path = _write_json(args, "isop_report", payload)
    ok = all(r["holds"] for r in reports.values()) and \
        hull["max_violation"] <= 1e-6
    _print(args, f"verdict: {'holds' if ok else 'violated'} (report: {path})")
    return 0 if ok else 1


def cmd_funk_roundtrip(args) -> int:
    if args.selftest:
        return _selftest("funk-roundtrip", [
            ("constants are fixed points",
             lambda: abs(_radon.funk_inverse(
                 lambda p: np.ones(len(p)), L=8)(np.eye(3)[None, 0]) - 1.0)
             < 1e-10),
        ], args)
    rng = np.random.default_rng(args.seed)
    L = args.band
    coeff = np.zeros((L + 1) ** 2)
    for l in range(0, L + 1, 2):
        for k in range(-l, l + 1):
            coeff[_radon.harmonic_index(l, k)] = rng.normal()
    f = _radon.SynthesizedSphereFunction(_radon.SphericalHarmonicCoeffs(L, coeff))

    def forward(points):
        points = np.atleast_2d(points)
        return np.array([_radon.spherical_radon(f, z, N=max(64, 4 * L))
                         for z in points])

    inv = _radon.funk_inverse(forward, L=L + 2)
    probe = _metrics.sphere_grid(2, args.grid)
    err = float(np.max(np.abs(inv(probe) - f(probe))))
    payload = {"band": L, "seed": args.seed, "sup_error": err,
               "tolerance": args.tol}
    path = _write_json(args, "funk_roundtrip_report", payload)
    _print(args, f"round-trip sup error {err:.3e} (report: {path})")
    return 0 if err <= args.tol else 1


# ---------------------------------------------------------------------------
# wiring


def _add_common(p, tol_default=1e-3):
    p.add_argument("--metric", help="metric JSON (inline or a file path)")
    p.add_argument("--kind", help="zoo kind shorthand (with --b/--epsilon)")
    p.add_argument("--b", help="comma-separated drift vector")
    p.add_argument("--epsilon", type=float, help="perturbed-quartic weight")
    p.add_argument("--grid", type=int, default=None, help="sphere grid resolution")
    p.add_argument("--quad", type=int, default=None, help="quadrature order")
    p.add_argument("--tol", type=float, default=tol_default)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file with defaults (flags win)")
    p.add_argument("--selftest", action="store_true",
                   help="run the built-in checks and exit")
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finsler-area",
        description="area integrands, ellipticity scans, and minimal graphs "
                    "for Finsler metrics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-metric", help="validity / symmetrization check")
    _add_common(p)
    p.add_argument("--ga", action="store_true",
                   help="also require the symmetrized metric to pass")
    p.set_defaults(fn=cmd_check_metric, grid_default=64)

    p = sub.add_parser("symmetrize", help="tabulate the even symmetrization")
    _add_common(p)
    p.set_defaults(fn=cmd_symmetrize, grid_default=32)

    p = sub.add_parser("threshold-scan", help="bisect the sharp drift bound")
    _add_common(p, tol_default=2e-3)
    p.add_argument("--family", default="randers",
                   choices=sorted(_metrics._FAMILY_MAKERS))
    p.add_argument("--m", type=int, default=2)
    p.set_defaults(fn=cmd_threshold_scan, grid_default=128)

    p = sub.add_parser("integrand-scan", help="tabulate the area integrand")
    _add_common(p)
    p.set_defaults(fn=cmd_integrand_scan, grid_default=24)

    p = sub.add_parser("ellipticity-scan",
                       help="tangential Hessian eigenvalues over the sphere")
    _add_common(p)
    p.set_defaults(fn=cmd_ellipticity_scan, grid_default=24)

    p = sub.add_parser("solve-graph", help="minimize the graph-area energy")
    _add_common(p, tol_default=1e-10)
    p.add_argument("--mesh", default="disk:24",
                   help="disk:R | square:N | mesh JSON file")
    p.add_argument("--boundary", default="cosine_wave:0.3",
                   help="affine:a1,a2,c | sine:amp | cosine_wave:amp | CSV file")
    p.add_argument("--initial", default="affine_fit")
    p.set_defaults(fn=cmd_solve_graph, grid_default=24)

    p = sub.add_parser("verify-isop", help="solve, then check the inequalities")
    _add_common(p, tol_default=1e-10)
    p.add_argument("--mesh", default="disk:24")
    p.add_argument("--boundary", default="cosine_wave:0.3")
    p.add_argument("--which", default="both", choices=["isop1", "isop2", "both"])
    p.set_defaults(fn=cmd_verify_isop, grid_default=24)

    p = sub.add_parser("funk-roundtrip",
                       help="inverse-transform a random even band-limited function")
    _add_common(p, tol_default=1e-8)
    p.add_argument("--band", type=int, default=8)
    p.set_defaults(fn=cmd_funk_roundtrip, grid_default=32)
    return parser


def _apply_config(args) -> None:
    """Fill unset values from --config; explicit flags keep priority."""
    if getattr(args, "config", None):
        payload = json.loads(Path(args.config).read_text())
        unknown = set(payload) - _CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        for key, value in payload.items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
    if getattr(args, "grid", None) is None:
        args.grid = getattr(args, "grid_default", 32)
    for name in ("tol",):
        if getattr(args, name, None) is not None and getattr(args, name) <= 0:
            raise UsageError(f"--{name} must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FinslerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
