"""Command-line front end.

Subcommands: chart, curve, surface, geodesic, transport, bonnet, potential.
Exit codes: 0 on success, 1 on numeric failure (residual above tolerance,
singularities, failed quadrature), 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import charts, curves, expr, surface_curves, surfaces
from .definitions import DefinitionError, load_definition, parse_definition
from .errors import (DegenerateCurvature, GeodeticaError, NotClosed,
                     NotPotential, NotVorticular, OutOfDomain,
                     QuadratureError, SingularPoint, TensorShapeError,
                     ZeroSpeed)

USAGE_ERRORS = (DefinitionError, expr.ParseError, OutOfDomain,
                TensorShapeError, ValueError, OSError)
NUMERIC_ERRORS = (SingularPoint, DegenerateCurvature, QuadratureError,
                  NotPotential, NotVorticular, NotClosed, ZeroSpeed,
                  FloatingPointError, expr.EvalDomainError,
                  expr.UnboundVariableError)


class NumericFailure(GeodeticaError):
    """A computed residual exceeded its tolerance."""


def fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass
class Report:
    command: str
    inputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    trajectory: object = None  # optional (params, coords, cartesian) arrays

    def to_dict(self) -> dict:
        def conv(value):
            if isinstance(value, (bool, np.bool_)):
                return bool(value)
            if isinstance(value, (int, np.integer)):
                return int(value)
            if isinstance(value, (np.floating, float)):
                return float(value)
            if isinstance(value, np.ndarray):
                return [conv(v) for v in value.tolist()] \
                    if value.ndim else float(value)
            if isinstance(value, (list, tuple)):
                return [conv(v) for v in value]
            return value

        return {
            "command": self.command,
            "inputs": {k: conv(v) for k, v in self.inputs.items()},
            "results": {k: conv(v) for k, v in self.results.items()},
            "residuals": {k: conv(v) for k, v in self.residuals.items()},
            "tolerances": {k: conv(v) for k, v in self.tolerances.items()},
            "wall_time_s": self.wall_time_s,
        }


def _flatten(prefix, value, rows):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    elif isinstance(value, float):
        rows.append((prefix, fmt(value)))
    else:
        rows.append((prefix, str(value)))


def emit(report: Report, fmt_kind: str, plot_path=None, csv_path=None):
    data = report.to_dict()
    if fmt_kind == "json":
        print(json.dumps(data, indent=2, default=fmt))
    elif fmt_kind == "csv":
        print("key,value")
        rows = []
        _flatten("", {k: data[k] for k in
                      ("inputs", "results", "residuals", "tolerances")}, rows)
        for key, value in rows:
            print(f"{key},{value}")
    else:
        print(f"command: {data['command']}")
        for section in ("inputs", "results", "residuals", "tolerances"):
            if not data[section]:
                continue
            print(f"{section}:")
            rows = []
            _flatten("", data[section], rows)
            width = max(len(k) for k, _ in rows)
            for key, value in rows:
                print(f"  {key:<{width}}  {value}")
        print(f"wall_time_s: {data['wall_time_s']:.6f}")
    if csv_path:
        _write_trajectory_csv(report, csv_path)
    if plot_path:
        _write_svg(report, plot_path)


def _trajectory_rows(report: Report):
    if report.trajectory is None:
        return None
    params, coords, cartesian = report.trajectory
    rows = []
    for k in range(len(params)):
        row = [params[k]] + list(coords[k]) + list(cartesian[k])
        rows.append(row)
    ncoords = coords.shape[1]
    header = (["t"] + [f"u{i + 1}" for i in range(ncoords)]
              + ["x", "y", "z"][:cartesian.shape[1]])
    return header, rows


def _write_trajectory_csv(report: Report, path: str):
    table = _trajectory_rows(report)
    if table is None:
        print("warning: no trajectory to write", file=sys.stderr)
        return
    header, rows = table
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(fmt(v) for v in row) + "\n")


def _write_svg(report: Report, path: str):
    """Polyline plot of the trajectory projected on the first two Cartesian
    axes, with framed axes and corner labels."""
    if report.trajectory is None or len(report.trajectory[0]) == 0:
        print("warning: empty trajectory, no plot written", file=sys.stderr)
        return
    _, _, cartesian = report.trajectory
    xs, ys = cartesian[:, 0], cartesian[:, 1]
    xmin, xmax = float(xs.min()), float(xs.max())
    ymin, ymax = float(ys.min()), float(ys.max())
    spanx = (xmax - xmin) or 1.0
    spany = (ymax - ymin) or 1.0
    width, height, margin = 640, 480, 50

    def sx(x):
        return margin + (x - xmin) / spanx * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - ymin) / spany * (height - 2 * margin)

    points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    svg = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="black"/>',
        f'<text x="{margin}" y="{height - margin + 20}" '
        f'font-size="12">x: {xmin:.6g} .. {xmax:.6g}</text>',
        f'<text x="5" y="{margin - 10}" font-size="12">'
        f'y: {ymin:.6g} .. {ymax:.6g}</text>',
        f'<polyline points="{points}" fill="none" stroke="blue" '
        f'stroke-width="1.5"/>',
        "</svg>",
    ]
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(svg) + "\n")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _floats(text: str):
    return [float(p) for p in text.split(",")]


def _range(text: str):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ValueError(f"expected lo:hi, got {text!r}")
    return float(lo), float(hi)


def _split_exprs(text: str, n: int):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ValueError(
            f"expected {n} comma-separated expressions, got {len(parts)}")
    return [expr.parse(p) for p in parts]


def _load(path: str, kind: str, host=None):
    definition, obj = load_definition(path, host=host)
    if definition.kind != kind:
        raise DefinitionError(
            f"{path}: expected kind={kind}, found {definition.kind}")
    return definition, obj


def _maybe_dump(args) -> bool:
    if getattr(args, "dump", False) and getattr(args, "file", None):
        with open(args.file, "r", encoding="utf-8") as handle:
            sys.stdout.write(handle.read())
        return True
    return False


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_chart(args) -> Report:
    if _maybe_dump(args):
        return None
    if args.builtin:
        chart = charts.builtin_chart(args.builtin)
        source = args.builtin
    else:
        _, chart = _load(args.file, "chart")
        source = args.file
    u = _floats(args.point)
    report = Report(command="chart",
                    inputs={"chart": source, "point": u})
    data = charts.frame(chart, u)
    if args.show in ("metric", "all"):
        report.results["metric"] = data.metric.components
        report.results["metric_inv"] = data.metric_inv.components
    if args.show in ("christoffel", "all"):
        report.results["christoffel"] = data.christoffel
    if args.laplacian:
        f = expr.parse(args.laplacian)
        report.inputs["laplacian_of"] = args.laplacian
        report.results["laplacian"] = charts.laplacian(chart, f, u)
    if args.grad:
        f = expr.parse(args.grad)
        report.inputs["gradient_of"] = args.grad
        report.results["gradient"] = charts.gradient(chart, f, u).components
    if args.div:
        comps = _split_exprs(args.div, chart.dim)
        fld = charts.TensorFieldOnChart(
            (1, 0), np.array(comps, dtype=object))
        report.inputs["divergence_of"] = args.div
        report.results["divergence"] = charts.divergence(chart, fld, u)
    if args.rot:
        comps = _split_exprs(args.rot, 3)
        fld = charts.TensorFieldOnChart(
            (1, 0), np.array(comps, dtype=object))
        report.inputs["rotor_of"] = args.rot
        report.results["rotor"] = charts.rotor(chart, fld, u).components
    return report


def _cmd_curve(args) -> Report:
    if _maybe_dump(args):
        return None
    if args.file:
        _, curve = _load(args.file, "curve3d")
        source = args.file
    else:
        if not args.domain:
            raise ValueError("--expr requires --domain a:b")
        x, y, z = _split_exprs(args.expr, 3)
        curve = curves.SpaceCurve(x, y, z, _range(args.domain))
        source = args.expr
    report = Report(command="curve", inputs={"curve": source})
    if args.frenet is not None:
        frame = curves.frenet(curve, args.frenet)
        report.inputs["frenet_at"] = args.frenet
        report.results["tangent"] = frame.tangent
        report.results["normal"] = frame.normal
        report.results["binormal"] = frame.binormal
        report.results["curvature"] = frame.curvature
        report.results["torsion"] = frame.torsion
    if args.kinematics is not None:
        kin = curves.kinematics(curve, args.kinematics)
        report.inputs["kinematics_at"] = args.kinematics
        report.results["velocity"] = kin.velocity
        report.results["acceleration"] = kin.acceleration
        report.results["tangential"] = kin.tangential
        report.results["centripetal"] = kin.centripetal
        report.residuals["split"] = float(np.max(np.abs(
            kin.acceleration - kin.tangential - kin.centripetal)))
        report.tolerances["split"] = 1e-8
    if args.length:
        a, b = _range(args.length)
        report.inputs["length_over"] = [a, b]
        report.results["length"] = curves.arc_length(curve, a, b,
                                                     tol=args.tol)
    if args.evolute:
        sample = curves.evolute(curve, args.evolute)
        report.trajectory = (sample.params,
                             np.empty((len(sample.params), 0)),
                             sample.points)
        report.results["evolute_samples"] = len(sample.params)
    if args.evolvent is not None:
        sample = curves.evolvent(curve, args.evolvent)
        report.trajectory = (sample.params,
                             np.empty((len(sample.params), 0)),
                             sample.points)
        report.results["evolvent_samples"] = len(sample.params)
    return report


def _cmd_surface(args) -> Report:
    if _maybe_dump(args):
        return None
    _, surface = _load(args.file, "surface")
    u = _floats(args.point)
    report = Report(command="surface",
                    inputs={"surface": args.file, "point": u})
    if args.report == "curvature":
        rep = surfaces.curvature(surface, u)
        mean_forms, gauss_forms = surfaces.invariants_by_forms(surface, u)
        report.results.update({
            "k1": rep.k1, "k2": rep.k2,
            "mean_curvature": rep.mean,
            "gaussian_curvature": rep.gaussian,
            "point_class": rep.point_class,
            "umbilical": rep.umbilical,
            "direction_1": rep.directions[0],
            "direction_2": rep.directions[1],
            "scalar_curvature": rep.scalar_curvature,
        })
        report.residuals.update({
            "gauss": rep.gauss_residual,
            "codazzi": rep.codazzi_residual,
            "invariants_by_forms": max(abs(rep.mean - mean_forms),
                                       abs(rep.gaussian - gauss_forms)),
        })
        report.tolerances.update({"gauss": 1e-8, "codazzi": 1e-7,
                                  "invariants_by_forms": 1e-10})
        _enforce(report)
    else:  # point data
        data = surfaces.surface_point(surface, u)
        report.results.update({
            "metric": data.metric.components,
            "second_form": data.second_form,
            "normal": data.normal,
            "christoffel": data.christoffel,
        })
    return report


def _enforce(report: Report):
    for key, value in report.residuals.items():
        tol = report.tolerances.get(key)
        if tol is not None and value > tol:
            raise NumericFailure(
                f"residual {key}={fmt(value)} exceeds tolerance {fmt(tol)}")


def _cmd_geodesic(args) -> Report:
    _, surface = _load(args.surface, "surface")
    u0 = _floats(args.start)
    d0 = _floats(args.direction)
    trace = surface_curves.geodesic_trace(surface, u0, d0, args.length,
                                          steps=args.steps)
    report = Report(command="geodesic",
                    inputs={"surface": args.surface, "start": u0,
                            "direction": d0, "length": args.length,
                            "steps": args.steps})
    g_end = surfaces.surface_point(surface, trace.coords[-1])
    speed_end = float(trace.velocities[-1]
                      @ g_end.metric.components @ trace.velocities[-1])
    report.results["end_point"] = trace.coords[-1]
    report.results["end_cartesian"] = trace.cartesian[-1]
    report.residuals["unit_speed_drift"] = abs(speed_end - 1.0)
    report.tolerances["unit_speed_drift"] = max(1e-8 * args.length, 1e-10)
    report.trajectory = (trace.params, trace.coords, trace.cartesian)
    _enforce(report)
    return report


def _cmd_transport(args) -> Report:
    _, surface = _load(args.surface, "surface")
    _, curve = _load(args.curve, "surface_curve", host=surface)
    a0 = _floats(args.vector)
    trajectory = surface_curves.inner_transport(curve, a0, steps=args.steps)
    report = Report(command="transport",
                    inputs={"surface": args.surface, "curve": args.curve,
                            "vector": a0, "steps": args.steps})
    g0 = surfaces.surface_point(surface, trajectory.coords[0])
    g1 = surfaces.surface_point(surface, trajectory.coords[-1])
    n0 = float(trajectory.components[0] @ g0.metric.components
               @ trajectory.components[0])
    n1 = float(trajectory.components[-1] @ g1.metric.components
               @ trajectory.components[-1])
    report.results["end_components"] = trajectory.components[-1]
    report.results["end_cartesian"] = trajectory.cartesian[-1]
    report.residuals["norm_drift"] = abs(n1 - n0) / max(abs(n0), 1e-300)
    report.tolerances["norm_drift"] = 1e-7
    report.trajectory = (trajectory.params, trajectory.coords,
                         trajectory.cartesian)
    _enforce(report)
    return report


def _cmd_bonnet(args) -> Report:
    _, surface = _load(args.surface, "surface")
    sides = [_load(path, "surface_curve", host=surface)[1]
             for path in args.side]
    result = surface_curves.gauss_bonnet_check(surface, sides,
                                               steps=args.steps,
                                               nodes=args.nodes)
    report = Report(command="bonnet",
                    inputs={"surface": args.surface, "sides": args.side})
    report.results["area_term"] = result.area_term
    report.results["geodesic_term"] = result.geodesic_term
    report.results["angle_sum"] = result.angle_sum
    report.residuals["balance"] = result.residual
    report.tolerances["balance"] = args.tol
    _enforce(report)
    return report


def _cmd_potential(args) -> Report:
    comps = _split_exprs(args.field, 3)
    points = ([_floats(p) for p in args.at] if args.at
              else [[0.3, -0.4, 0.5]])
    report = Report(command="potential",
                    inputs={"kind": args.kind, "field": args.field,
                            "points": points})
    if args.kind == "scalar":
        phi = charts.scalar_potential(comps, tol=args.tol, nodes=args.nodes)
        report.results["values"] = [phi(p) for p in points]
    else:
        a = charts.vector_potential(comps, tol=args.tol, nodes=args.nodes)
        report.results["values"] = [a(p) for p in points]
    return report


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geodetica",
        description="Numerical differential geometry of curves, charts, "
                    "and surfaces.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, steps=1000, nodes=64, tol=1e-10):
        p.add_argument("--format", choices=("text", "json", "csv"),
                       default="text")
        p.add_argument("--plot", metavar="PATH", default=None,
                       help="write an SVG polyline plot of the trajectory")
        p.add_argument("--csv", metavar="PATH", default=None,
                       help="write the trajectory as CSV (t,u...,x,y,z)")
        p.add_argument("--steps", type=int, default=steps)
        p.add_argument("--nodes", type=int, default=nodes)
        p.add_argument("--tol", type=float, default=tol)

    p = sub.add_parser("chart", help="metric, Christoffel symbols, and "
                                     "operators of a coordinate system")
    p.add_argument("--builtin", choices=charts.BUILTIN_CHARTS)
    p.add_argument("--file")
    p.add_argument("--dump", action="store_true")
    p.add_argument("--point", required=False, default="1,1,1")
    p.add_argument("--show", choices=("metric", "christoffel", "all"),
                   default="all")
    p.add_argument("--laplacian", metavar="EXPR")
    p.add_argument("--grad", metavar="EXPR")
    p.add_argument("--div", metavar="F1,F2,F3")
    p.add_argument("--rot", metavar="F1,F2,F3")
    common(p)
    p.set_defaults(func=_cmd_chart)

    p = sub.add_parser("curve", help="Frenet data, lengths, evolutes")
    p.add_argument("--file")
    p.add_argument("--dump", action="store_true")
    p.add_argument("--expr", metavar="X,Y,Z")
    p.add_argument("--domain", metavar="A:B")
    p.add_argument("--frenet", type=float, metavar="T")
    p.add_argument("--kinematics", type=float, metavar="T")
    p.add_argument("--length", metavar="A:B")
    p.add_argument("--evolute", type=int, metavar="N")
    p.add_argument("--evolvent", type=float, metavar="C")
    common(p)
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("surface", help="curvature report at a point")
    p.add_argument("--file", required=True)
    p.add_argument("--dump", action="store_true")
    p.add_argument("--point", default="0.5,0.5")
    p.add_argument("--report", choices=("curvature", "point"),
                   default="curvature")
    common(p)
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("geodesic", help="trace a geodesic line")
    p.add_argument("--surface", required=True)
    p.add_argument("--start", required=True, metavar="U1,U2")
    p.add_argument("--direction", required=True, metavar="D1,D2")
    p.add_argument("--length", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("transport", help="inner parallel transport along "
                                         "a surface curve")
    p.add_argument("--surface", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--vector", required=True, metavar="A1,A2")
    common(p)
    p.set_defaults(func=_cmd_transport)

    p = sub.add_parser("bonnet", help="Gauss-Bonnet balance of a polygon")
    p.add_argument("--surface", required=True)
    p.add_argument("--side", action="append", required=True)
    common(p, tol=1e-4)
    p.set_defaults(func=_cmd_bonnet)

    p = sub.add_parser("potential", help="scalar or vector potential of a "
                                         "Cartesian field")
    p.add_argument("--kind", choices=("scalar", "vector"), required=True)
    p.add_argument("--field", required=True, metavar="F1,F2,F3")
    p.add_argument("--at", action="append", metavar="X1,X2,X3")
    common(p, tol=1e-8)
    p.set_defaults(func=_cmd_potential)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    started = time.perf_counter()
    try:
        report = args.func(args)
    except NumericFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if report is not None:
        report.wall_time_s = time.perf_counter() - started
        emit(report, args.format, plot_path=args.plot, csv_path=args.csv)
    return 0


def main():  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
