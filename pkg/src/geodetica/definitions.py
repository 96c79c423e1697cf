"""Line-oriented key=value definition files for charts, surfaces, curves,
and fields.

Format (one key per line, ``#`` starts a comment line):

    kind=surface                 # chart | surface | curve3d | surface_curve | field
    params=theta,phi             # coordinate / parameter names
    expr.x1=R*sin(theta)*cos(phi)
    expr.x2=R*sin(theta)*sin(phi)
    expr.x3=R*cos(theta)
    box=0.000001:3.141592,-25:25 # one lo:hi range per coordinate
    domain=0:6.283185            # curves only
    orientation=1                # surfaces only, +1 or -1
    const.R=1                    # named constants, substituted into exprs

Expression keys by kind: charts and surfaces use expr.x1..x3 (a 2-d chart
uses expr.x1..x2), curve3d uses expr.x1..x3 of t, surface_curve uses
expr.u1..u2 of t, field uses expr.F1..F3.  Unknown keys are rejected with
the line number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import expr
from .charts import Chart, ChartPath, TensorFieldOnChart
from .curves import SpaceCurve
from .errors import GeodeticaError
from .surface_curves import SurfaceCurve
from .surfaces import Surface

__all__ = ["DefinitionError", "DefinitionFile", "load_definition",
           "parse_definition"]

KINDS = ("chart", "surface", "curve3d", "surface_curve", "field")

_SCALAR_KEYS = {"kind", "params", "box", "domain", "orientation"}


class DefinitionError(GeodeticaError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class DefinitionFile:
    """Parsed definition plus the raw text it came from."""

    kind: str
    params: tuple[str, ...]
    expressions: dict
    box: tuple
    domain: tuple
    orientation: int
    constants: dict
    raw: str


def parse_definition(text: str) -> DefinitionFile:
    entries = {}
    exprs = {}
    consts = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DefinitionError("expected key=value", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("expr."):
            name = key[5:]
            if name in exprs:
                raise DefinitionError(f"duplicate expression {name!r}", lineno)
            try:
                exprs[name] = expr.parse(value)
            except expr.ParseError as exc:
                raise DefinitionError(f"bad expression for {name!r}: {exc}",
                                      lineno) from exc
        elif key.startswith("const."):
            name = key[6:]
            try:
                consts[name] = float(value)
            except ValueError as exc:
                raise DefinitionError(f"bad constant {name!r}: {value!r}",
                                      lineno) from exc
        elif key in _SCALAR_KEYS:
            if key in entries:
                raise DefinitionError(f"duplicate key {key!r}", lineno)
            entries[key] = (value, lineno)
        else:
            raise DefinitionError(f"unknown key {key!r}", lineno)

    if "kind" not in entries:
        raise DefinitionError("missing required key 'kind'")
    kind = entries["kind"][0]
    if kind not in KINDS:
        raise DefinitionError(f"unknown kind {kind!r}", entries["kind"][1])

    if "params" not in entries:
        raise DefinitionError("missing required key 'params'")
    params = tuple(p.strip() for p in entries["params"][0].split(","))

    box = _parse_ranges(entries.get("box"))
    domain_entry = entries.get("domain")
    domain = None
    if domain_entry is not None:
        ranges = _parse_ranges(domain_entry)
        if len(ranges) != 1:
            raise DefinitionError("domain takes a single lo:hi range",
                                  domain_entry[1])
        domain = ranges[0]

    orientation = 1
    if "orientation" in entries:
        value, lineno = entries["orientation"]
        try:
            orientation = int(value)
        except ValueError:
            raise DefinitionError(f"bad orientation {value!r}", lineno)
        if orientation not in (1, -1):
            raise DefinitionError("orientation must be 1 or -1", lineno)

    substituted = {}
    for name, e in exprs.items():
        folded = expr.substitute(e, consts)
        unbound = set(expr.free_variables(folded)) - set(params)
        if unbound:
            raise DefinitionError(
                f"expression {name!r} references unbound names: "
                + ", ".join(sorted(unbound)))
        substituted[name] = folded

    return DefinitionFile(kind=kind, params=params, expressions=substituted,
                          box=box, domain=domain, orientation=orientation,
                          constants=consts, raw=text)


def _parse_ranges(entry):
    if entry is None:
        return None
    value, lineno = entry
    ranges = []
    for part in value.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise DefinitionError(f"range {part!r} must be lo:hi", lineno)
        try:
            ranges.append((float(lo), float(hi)))
        except ValueError as exc:
            raise DefinitionError(f"bad range {part!r}", lineno) from exc
    return tuple(ranges)


def _require_exprs(definition: DefinitionFile, names):
    missing = [n for n in names if n not in definition.expressions]
    if missing:
        raise DefinitionError(
            "missing expression field(s): " + ", ".join(missing))
    extra = [n for n in definition.expressions if n not in names]
    if extra:
        raise DefinitionError(
            "unexpected expression field(s): " + ", ".join(sorted(extra)))
    return [definition.expressions[n] for n in names]


def build_object(definition: DefinitionFile, host: Surface = None):
    """Instantiate the object a definition describes."""
    kind = definition.kind
    if kind == "chart":
        dim = len(definition.params)
        names = [f"x{i + 1}" for i in range(dim)]
        maps = _require_exprs(definition, names)
        if definition.box is None or len(definition.box) != dim:
            raise DefinitionError("chart needs one box range per coordinate")
        return Chart(definition.params, tuple(maps), definition.box)
    if kind == "surface":
        if len(definition.params) != 2:
            raise DefinitionError("surface needs exactly two parameters")
        maps = _require_exprs(definition, ["x1", "x2", "x3"])
        if definition.box is None or len(definition.box) != 2:
            raise DefinitionError("surface needs a two-range box")
        return Surface(definition.params, tuple(maps), definition.box,
                       definition.orientation)
    if kind == "curve3d":
        if len(definition.params) != 1:
            raise DefinitionError("curve3d needs exactly one parameter")
        maps = _require_exprs(definition, ["x1", "x2", "x3"])
        if definition.domain is None:
            raise DefinitionError("curve3d needs a domain")
        return SpaceCurve(maps[0], maps[1], maps[2], definition.domain,
                          definition.params[0])
    if kind == "surface_curve":
        if host is None:
            raise DefinitionError("surface_curve needs a host surface")
        if len(definition.params) != 1:
            raise DefinitionError("surface_curve needs exactly one parameter")
        comps = _require_exprs(definition, ["u1", "u2"])
        if definition.domain is None:
            raise DefinitionError("surface_curve needs a domain")
        return SurfaceCurve(host, comps[0], comps[1], definition.domain,
                            definition.params[0])
    if kind == "field":
        comps = _require_exprs(definition, ["F1", "F2", "F3"])
        comps_array = TensorFieldOnChart.vector_from_strings(
            [expr.to_string(c) for c in comps])
        return comps_array
    raise DefinitionError(f"unknown kind {kind!r}")


def load_definition(path: str, host: Surface = None):
    """Read, parse, and instantiate a definition file."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    definition = parse_definition(text)
    return definition, build_object(definition, host=host)
