"""Curvilinear coordinate systems: moving frames, metric and Christoffel
symbols, covariant derivatives, parallel transport, straight-line tracing,
and the classical vector-calculus operators with potential reconstruction.

Charts map 2 or 3 curvilinear coordinates to Cartesian coordinates of the
plane or space through arithmetic expressions; all derivatives are exact
jet evaluations of those expressions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr
from .errors import (NotPotential, NotVorticular, OutOfDomain, SingularPoint,
                     TensorShapeError)
from .numerics import integrate_gl, rk4_trace
from .tensor import PSEUDOTENSOR, TENSOR, Tensor, levi_civita

__all__ = [
    "Chart", "ChartPointData", "TensorFieldOnChart", "ChartPath",
    "Trajectory", "builtin_chart", "BUILTIN_CHARTS",
    "frame", "covariant_derivative", "transport_parallel",
    "straight_line_trace", "gradient", "divergence", "rotor", "laplacian",
    "scalar_potential", "vector_potential",
]

JACOBI_FLOOR = 1e-12


@dataclass(frozen=True)
class Chart:
    """Coordinate system given by Cartesian maps of 2 or 3 coordinates."""

    coords: tuple[str, ...]
    maps: tuple[expr.Expression, ...]
    box: tuple[tuple[float, float], ...]
    singular_margin: float = 1e-6

    def __post_init__(self):
        dim = len(self.coords)
        if dim not in (2, 3):
            raise ValueError("charts must have 2 or 3 coordinates")
        if len(self.maps) != dim or len(self.box) != dim:
            raise ValueError("maps and box must match the coordinate count")
        allowed = set(self.coords)
        for m in self.maps:
            extra = set(expr.free_variables(m)) - allowed
            if extra:
                raise ValueError(f"map uses undeclared names {sorted(extra)}")
        object.__setattr__(self, "_orientation", None)

    @classmethod
    def from_strings(cls, coords: Sequence[str], maps: Sequence[str],
                     box: Sequence[Sequence[float]]) -> "Chart":
        return cls(tuple(coords), tuple(expr.parse(m) for m in maps),
                   tuple(tuple(map(float, b)) for b in box))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def check_point(self, u: Sequence[float]):
        if len(u) != self.dim:
            raise OutOfDomain(f"expected {self.dim} coordinates, got {len(u)}")
        for value, (lo, hi), name in zip(u, self.box, self.coords):
            if not (lo - 1e-12 <= value <= hi + 1e-12):
                raise OutOfDomain(
                    f"{name}={value!r} outside box [{lo}, {hi}]")

    def jets(self, u: Sequence[float], order: int):
        return [expr.eval_jet(m, self.coords, u, order) for m in self.maps]

    def point(self, u: Sequence[float]) -> np.ndarray:
        self.check_point(u)
        return np.array([expr.eval_scalar(m, dict(zip(self.coords, u)))
                         for m in self.maps])

    @property
    def orientation(self) -> float:
        """Sign of det(Jacobi), constant over the box (checked on a grid)."""
        cached = self.__dict__.get("_orientation")
        if cached is None:
            cached = self._derive_orientation()
            object.__setattr__(self, "_orientation", cached)
        return cached

    def _derive_orientation(self) -> float:
        center = [0.5 * (lo + hi) for lo, hi in self.box]
        sign = self._det_sign_at(center)
        if sign is None:
            raise SingularPoint("chart is singular at the box center")
        grids = [np.linspace(lo, hi, 3) for lo, hi in self.box]
        for u in itertools.product(*grids):
            s = self._det_sign_at(u)
            if s is not None and s != sign:
                raise SingularPoint(
                    "orientation is not constant over the box")
        return sign

    def _det_sign_at(self, u):
        try:
            jets = self.jets(u, 1)
        except expr.EvalDomainError:
            return None
        jac = np.array([[j.grad[a] for a in range(self.dim)] for j in jets])
        det = float(np.linalg.det(jac))
        if abs(det) < JACOBI_FLOOR:
            return None
        return 1.0 if det > 0 else -1.0


@dataclass(frozen=True)
class ChartPointData:
    """Frame, metric, and connection of a chart at one point.

    ``frame_vectors[j]`` is the j-th coordinate tangent vector in Cartesian
    components; ``christoffel[k][i][j]`` is symmetric in (i, j).
    """

    frame_vectors: np.ndarray
    metric: Tensor
    metric_inv: Tensor
    christoffel: np.ndarray


@dataclass(frozen=True)
class TensorFieldOnChart:
    """Tensor field whose components are expressions of the coordinates."""

    rank: tuple[int, int]
    components: np.ndarray  # object array of Expressions
    weight: str = TENSOR

    def __post_init__(self):
        r, s = self.rank
        comp = np.asarray(self.components, dtype=object)
        if comp.shape != () and comp.shape != (comp.shape[0],) * comp.ndim:
            raise TensorShapeError("component array must be hypercubic")
        object.__setattr__(self, "components", comp)

    @classmethod
    def vector_from_strings(cls, components: Sequence[str],
                            weight: str = TENSOR) -> "TensorFieldOnChart":
        comp = np.array([expr.parse(c) for c in components], dtype=object)
        return cls((1, 0), comp, weight)

    @classmethod
    def scalar_from_string(cls, text: str) -> "TensorFieldOnChart":
        comp = np.empty((), dtype=object)
        comp[()] = expr.parse(text)
        return cls((0, 0), comp)

    def check_dim(self, dim: int):
        r, s = self.rank
        expected = (dim,) * (r + s)
        if self.components.shape != expected:
            raise TensorShapeError(
                f"field of type {self.rank} needs shape {expected}, "
                f"got {self.components.shape}")


@dataclass(frozen=True)
class ChartPath:
    """Parametric curve written in chart coordinates."""

    coords: tuple[expr.Expression, ...]
    domain: tuple[float, float]
    var: str = "t"

    @classmethod
    def from_strings(cls, coords: Sequence[str], domain, var: str = "t"):
        return cls(tuple(expr.parse(c) for c in coords),
                   tuple(map(float, domain)), var)

    def state(self, t: float):
        jets = [expr.eval_jet(c, (self.var,), (t,), 1) for c in self.coords]
        return (np.array([j.value for j in jets]),
                np.array([j.grad[0] for j in jets]))


@dataclass(frozen=True)
class Trajectory:
    """Samples of an integrated path: parameters, coordinates, optional
    transported components, and the Cartesian image."""

    params: np.ndarray
    coords: np.ndarray
    vectors: np.ndarray
    cartesian: np.ndarray


# ---------------------------------------------------------------------------
# Frame, metric, Christoffel symbols
# ---------------------------------------------------------------------------

def _geometry(chart: Chart, u, order: int = 2):
    """Frame vectors, metric, inverse, metric derivatives at a point."""
    chart.check_point(u)
    dim = chart.dim
    jets = chart.jets(u, order)
    frame_vectors = np.array([[jets[q].grad[j] for q in range(dim)]
                              for j in range(dim)])
    if abs(np.linalg.det(frame_vectors)) < JACOBI_FLOOR:
        raise SingularPoint(f"Jacobi determinant below {JACOBI_FLOOR} at "
                            f"{tuple(u)}")
    hess = np.array([jets[q].hess for q in range(dim)])  # [q][a][b]
    g = frame_vectors @ frame_vectors.T
    # dg[k][i][j] = d g_ij / d u^k
    dg = np.einsum("qki,jq->kij", hess, frame_vectors) \
        + np.einsum("iq,qkj->kij", frame_vectors, hess)
    g_inv = np.linalg.inv(g)
    return jets, frame_vectors, g, g_inv, dg


def _christoffel(g_inv, dg):
    """Symmetric connection from metric derivatives."""
    # Gamma^k_ij = 1/2 g^{kr} (dg[i][r][j] + dg[j][i][r] - dg[r][i][j])
    braces = (np.einsum("irj->ijr", dg) + np.einsum("jir->ijr", dg)
              - np.einsum("rij->ijr", dg))
    return 0.5 * np.einsum("kr,ijr->kij", g_inv, braces)


def frame(chart: Chart, u: Sequence[float]) -> ChartPointData:
    """Moving frame, metric, and Christoffel symbols at a point."""
    _, frame_vectors, g, g_inv, dg = _geometry(chart, u)
    gamma = _christoffel(g_inv, dg)
    dim = chart.dim
    return ChartPointData(
        frame_vectors=frame_vectors,
        metric=Tensor(dim, 0, 2, g),
        metric_inv=Tensor(dim, 2, 0, g_inv),
        christoffel=gamma,
    )


def metric_derivatives(chart: Chart, u: Sequence[float]) -> np.ndarray:
    """Exact partials of the metric components: result[k][i][j]."""
    return _geometry(chart, u)[4]


# ---------------------------------------------------------------------------
# Covariant differentiation of expression fields
# ---------------------------------------------------------------------------

def _field_values_and_partials(field: TensorFieldOnChart, chart: Chart, u):
    field.check_dim(chart.dim)
    values = np.empty(field.components.shape)
    partials = np.empty(field.components.shape + (chart.dim,))
    for index in np.ndindex(field.components.shape or ()):
        jet = expr.eval_jet(field.components[index], chart.coords, u, 1)
        values[index] = jet.value
        partials[index] = jet.grad
    return values, partials


def covariant_derivative(field: TensorFieldOnChart, chart: Chart,
                         u: Sequence[float]) -> Tensor:
    """Covariant differential at a point; the new lower index comes last."""
    data = frame(chart, u)
    values, partials = _field_values_and_partials(field, chart, u)
    return _covariant_from_arrays(values, partials, data.christoffel,
                                  field.rank, chart.dim, field.weight)


def _covariant_from_arrays(values, partials, gamma, rank, dim, weight=TENSOR):
    r, s = rank
    result = np.moveaxis(partials, -1, 0)  # [d][indices...]
    for m in range(r):
        # +Gamma^{i_m}_{d v} A^{... v ...}
        term = np.tensordot(gamma, values, axes=(2, m))
        term = np.moveaxis(term, 0, m + 1)   # axes now [d][...i_m at m...]
        result = result + term
    for n in range(s):
        # -Gamma^{w}_{d j_n} A_{... w ...}
        term = np.tensordot(gamma, values, axes=(0, r + n))
        term = np.moveaxis(term, 1, r + n + 1)
        result = result - term
    components = np.moveaxis(result, 0, -1)
    return Tensor(dim, r, s + 1, components, weight)


# ---------------------------------------------------------------------------
# Parallel transport and straight lines
# ---------------------------------------------------------------------------

def transport_parallel(chart: Chart, path: ChartPath, a0: Sequence[float],
                       steps: int = 1000) -> Trajectory:
    """Carry a vector along a path keeping its covariant derivative zero."""
    dim = chart.dim
    if len(a0) != dim:
        raise TensorShapeError(f"initial vector needs {dim} components")
    if len(path.coords) != dim:
        raise TensorShapeError(f"path needs {dim} coordinate expressions")

    def rhs(t, a):
        u, udot = path.state(t)
        gamma = frame(chart, u).christoffel
        return -np.einsum("ijk,j,k->i", gamma, udot, a)

    t0, t1 = path.domain
    ts, avals = rk4_trace(rhs, a0, t0, t1, steps)
    coords = np.array([path.state(t)[0] for t in ts])
    cart = np.empty((len(ts), dim))
    for k, (t, a) in enumerate(zip(ts, avals)):
        vectors = frame(chart, coords[k]).frame_vectors
        cart[k] = a @ vectors
    return Trajectory(ts, coords, avals, cart)


def straight_line_trace(chart: Chart, u0: Sequence[float],
                        udot0: Sequence[float], length: float,
                        steps: int = 1000) -> Trajectory:
    """Trace the autoparallel line from a point with a given direction.

    The initial velocity is normalized to unit Euclidean speed, so the
    trace parameter is arc length.
    """
    dim = chart.dim
    data = frame(chart, u0)
    udot0 = np.asarray(udot0, dtype=float)
    speed = math.sqrt(udot0 @ data.metric.components @ udot0)
    if speed <= 0.0:
        raise ValueError("initial direction must be nonzero")
    udot0 = udot0 / speed

    def rhs(_, state):
        u, w = state[:dim], state[dim:]
        gamma = frame(chart, u).christoffel
        return np.concatenate([w, -np.einsum("ijk,j,k->i", gamma, w, w)])

    ts, states = rk4_trace(rhs, np.concatenate([u0, udot0]), 0.0, length,
                           steps)
    coords = states[:, :dim]
    vels = states[:, dim:]
    cart = np.array([chart.point(u) for u in coords])
    return Trajectory(ts, coords, vels, cart)


# ---------------------------------------------------------------------------
# Vector calculus operators
# ---------------------------------------------------------------------------

def gradient(chart: Chart, f: expr.Expression, u: Sequence[float]) -> Tensor:
    """Metric-raised differential of a scalar expression."""
    data = frame(chart, u)
    jet = expr.eval_jet(f, chart.coords, u, 1)
    comp = data.metric_inv.components @ np.asarray(jet.grad)
    return Tensor(chart.dim, 1, 0, comp)


def divergence(chart: Chart, field: TensorFieldOnChart,
               u: Sequence[float]) -> float:
    """Contraction of the covariant differential of a vector field."""
    if field.rank != (1, 0):
        raise TensorShapeError("divergence expects a vector field")
    nabla = covariant_derivative(field, chart, u)
    return float(np.trace(nabla.components))


def rotor(chart: Chart, field: TensorFieldOnChart,
          u: Sequence[float]) -> Tensor:
    """Curl of a vector field via the oriented volume form."""
    if chart.dim != 3:
        raise TensorShapeError("rotor requires a three-dimensional chart")
    if field.rank != (1, 0):
        raise TensorShapeError("rotor expects a vector field")
    data = frame(chart, u)
    xi = chart.orientation
    g = data.metric.components
    g_inv = data.metric_inv.components
    omega = xi * math.sqrt(np.linalg.det(g)) * levi_civita(3)
    nabla = covariant_derivative(field, chart, u).components  # [k][q]
    comp = np.einsum("mi,ijk,jq,kq->m", g_inv, omega, g_inv, nabla)
    return Tensor(3, 1, 0, comp)


def laplacian(chart: Chart, f: expr.Expression, u: Sequence[float]) -> float:
    """Laplace-Beltrami operator applied to a scalar expression."""
    data = frame(chart, u)
    jet = expr.eval_jet(f, chart.coords, u, 2)
    hess = np.asarray(jet.hess)
    grad = np.asarray(jet.grad)
    corrected = hess - np.einsum("kij,k->ij", data.christoffel, grad)
    return float(np.einsum("ij,ij->", data.metric_inv.components, corrected))


# ---------------------------------------------------------------------------
# Potential reconstruction in Cartesian coordinates
# ---------------------------------------------------------------------------

_CARTESIAN_NAMES = ("x1", "x2", "x3")


def _cartesian_field(components, names):
    comps = []
    for c in components:
        e = c if isinstance(c, expr.Expression) else expr.parse(c)
        extra = set(expr.free_variables(e)) - set(names)
        if extra:
            raise ValueError(f"field uses undeclared names {sorted(extra)}")
        comps.append(e)
    return comps


def _grid(box, points_per_axis):
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in box]
    return itertools.product(*axes)


def _curl_cartesian(comps, names, x):
    jets = [expr.eval_jet(c, names, x, 1) for c in comps]
    d = np.array([j.grad for j in jets])  # d[k][q] = dF^k/dx^q
    return np.array([d[2][1] - d[1][2], d[0][2] - d[2][0],
                     d[1][0] - d[0][1]])


class ScalarPotential:
    """Evaluator of a scalar potential built from three axis-parallel
    line integrals; the integration constant is zero."""

    def __init__(self, components, names, nodes):
        self._f = components
        self._names = names
        self._nodes = nodes

    def __call__(self, x: Sequence[float]) -> float:
        x1, x2, x3 = map(float, x)
        n = self._names

        def f1(t):
            return expr.eval_scalar(self._f[0], {n[0]: t, n[1]: 0.0,
                                                 n[2]: 0.0})

        def f2(t):
            return expr.eval_scalar(self._f[1], {n[0]: x1, n[1]: t,
                                                 n[2]: 0.0})

        def f3(t):
            return expr.eval_scalar(self._f[2], {n[0]: x1, n[1]: x2,
                                                 n[2]: t})

        return (integrate_gl(f1, 0.0, x1, self._nodes)
                + integrate_gl(f2, 0.0, x2, self._nodes)
                + integrate_gl(f3, 0.0, x3, self._nodes))


class VectorPotential:
    """Evaluator of a vector potential in the gauge with zero third
    component."""

    def __init__(self, components, names, nodes):
        self._f = components
        self._names = names
        self._nodes = nodes

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        x1, x2, x3 = map(float, x)
        n = self._names

        def f2_along3(t):
            return expr.eval_scalar(self._f[1], {n[0]: x1, n[1]: x2,
                                                 n[2]: t})

        def f3_along2(t):
            return expr.eval_scalar(self._f[2], {n[0]: x1, n[1]: t,
                                                 n[2]: 0.0})

        def f1_along3(t):
            return expr.eval_scalar(self._f[0], {n[0]: x1, n[1]: x2,
                                                 n[2]: t})

        a1 = (integrate_gl(f2_along3, 0.0, x3, self._nodes)
              - integrate_gl(f3_along2, 0.0, x2, self._nodes))
        a2 = -integrate_gl(f1_along3, 0.0, x3, self._nodes)
        return np.array([a1, a2, 0.0])


def scalar_potential(components, names=_CARTESIAN_NAMES,
                     box=((-1.0, 1.0),) * 3, grid_points: int = 4,
                     tol: float = 1e-8, nodes: int = 64) -> ScalarPotential:
    """Potential of a curl-free Cartesian field; raises NotPotential if the
    rotor exceeds ``tol`` anywhere on the verification grid."""
    comps = _cartesian_field(components, names)
    worst = 0.0
    for x in _grid(box, grid_points):
        worst = max(worst, float(np.max(np.abs(
            _curl_cartesian(comps, names, x)))))
    if worst > tol:
        raise NotPotential(f"rotor residual {worst!r} exceeds {tol!r}")
    return ScalarPotential(comps, names, nodes)


def vector_potential(components, names=_CARTESIAN_NAMES,
                     box=((-1.0, 1.0),) * 3, grid_points: int = 4,
                     tol: float = 1e-8, nodes: int = 64) -> VectorPotential:
    """Potential of a divergence-free Cartesian field; raises NotVorticular
    if the divergence exceeds ``tol`` anywhere on the verification grid."""
    comps = _cartesian_field(components, names)
    worst = 0.0
    for x in _grid(box, grid_points):
        jets = [expr.eval_jet(c, names, x, 1) for c in comps]
        div = sum(j.grad[k] for k, j in enumerate(jets))
        worst = max(worst, abs(float(div)))
    if worst > tol:
        raise NotVorticular(f"divergence residual {worst!r} exceeds {tol!r}")
    return VectorPotential(comps, names, nodes)


# ---------------------------------------------------------------------------
# Built-in charts
# ---------------------------------------------------------------------------

_BIG = 1.0e6
_TINY = 1.0e-6


def builtin_chart(name: str) -> Chart:
    """Charts shipped with the package: cartesian, polar, cylindrical,
    spherical (coordinate order rho, theta, phi)."""
    if name == "cartesian":
        return Chart.from_strings(
            ("x1", "x2", "x3"), ("x1", "x2", "x3"),
            ((-_BIG, _BIG),) * 3)
    if name == "polar":
        return Chart.from_strings(
            ("rho", "phi"),
            ("rho*cos(phi)", "rho*sin(phi)"),
            ((_TINY, _BIG), (-_BIG, _BIG)))
    if name == "cylindrical":
        return Chart.from_strings(
            ("rho", "phi", "h"),
            ("rho*cos(phi)", "rho*sin(phi)", "h"),
            ((_TINY, _BIG), (-_BIG, _BIG), (-_BIG, _BIG)))
    if name == "spherical":
        return Chart.from_strings(
            ("rho", "theta", "phi"),
            ("rho*sin(theta)*cos(phi)",
             "rho*sin(theta)*sin(phi)",
             "rho*cos(theta)"),
            ((_TINY, _BIG), (_TINY, math.pi - _TINY), (-_BIG, _BIG)))
    raise ValueError(f"unknown builtin chart {name!r}")


BUILTIN_CHARTS = ("cartesian", "polar", "cylindrical", "spherical")
