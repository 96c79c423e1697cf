"""Curves lying on a surface: tangents, lengths, the geodesic/normal
curvature split, asymptotic directions, geodesic tracing, inner parallel
transport, holonomy angles, and the Gauss-Bonnet balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr
from .errors import NotClosed, TensorShapeError, ZeroSpeed
from .numerics import (integrate_adaptive, integrate_gl, integrate_rectangle,
                       integrate_triangle, rk4_trace)
from .surfaces import Surface, point_with_metric_derivatives, surface_point

__all__ = [
    "SurfaceCurve", "InnerTangent", "CurveCurvatures",
    "TransportTrajectory", "GeodesicTrace", "GaussBonnetReport",
    "inner_tangent", "length_on_surface", "curve_curvatures",
    "is_asymptotic", "geodesic_trace", "inner_transport",
    "holonomy_angle", "holonomy_by_area", "gauss_bonnet_check",
]

SPEED_FLOOR = 1e-12
ASYMPTOTIC_TOL = 1e-10
CLOSURE_TOL = 1e-9
VERTEX_GAP_TOL = 1e-8


@dataclass(frozen=True)
class SurfaceCurve:
    """Curve written in the parameters of a host surface."""

    host: Surface
    u1: expr.Expression
    u2: expr.Expression
    domain: tuple[float, float]
    var: str = "t"

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy t_min < t_max")
        for component in (self.u1, self.u2):
            extra = set(expr.free_variables(component)) - {self.var}
            if extra:
                raise ValueError(
                    f"curve components may only depend on {self.var!r}")

    @classmethod
    def from_strings(cls, host: Surface, u1: str, u2: str, domain,
                     var: str = "t") -> "SurfaceCurve":
        return cls(host, expr.parse(u1), expr.parse(u2),
                   tuple(map(float, domain)), var)

    def state(self, t: float, order: int = 1):
        """Parameter point and derivatives: (u, udot[, uddot])."""
        jets = [expr.eval_jet(c, (self.var,), (t,), order)
                for c in (self.u1, self.u2)]
        out = [np.array([j.value for j in jets]),
               np.array([j.grad[0] for j in jets])]
        if order >= 2:
            out.append(np.array([j.hess[0][0] for j in jets]))
        return out

    def embedded(self):
        """The same curve as a curve of E^3 (composition with the host map)."""
        from .curves import SpaceCurve
        mapping = {self.host.params[0]: expr.Expression(self.u1.root),
                   self.host.params[1]: expr.Expression(self.u2.root)}
        x, y, z = (expr.substitute(m, mapping) for m in self.host.maps)
        return SpaceCurve(x, y, z, self.domain, self.var)


@dataclass(frozen=True)
class InnerTangent:
    inner: np.ndarray
    outer: np.ndarray


@dataclass(frozen=True)
class CurveCurvatures:
    curvature: float
    normal_curvature: float
    geodesic_curvature: float


@dataclass(frozen=True)
class TransportTrajectory:
    params: np.ndarray
    coords: np.ndarray       # (N+1, 2) parameter points
    components: np.ndarray   # (N+1, rank-dependent) transported components
    cartesian: np.ndarray    # (N+1, 3) image vectors (vectors only)


@dataclass(frozen=True)
class GeodesicTrace:
    params: np.ndarray
    coords: np.ndarray
    velocities: np.ndarray
    cartesian: np.ndarray


@dataclass(frozen=True)
class GaussBonnetReport:
    area_term: float
    geodesic_term: float
    angle_sum: float
    residual: float


# ---------------------------------------------------------------------------
# Tangents, lengths, curvature split
# ---------------------------------------------------------------------------

def inner_tangent(curve: SurfaceCurve, t: float) -> InnerTangent:
    u, udot = curve.state(t)
    data = surface_point(curve.host, u)
    return InnerTangent(udot, udot @ data.tangents)


def length_on_surface(curve: SurfaceCurve, a: float, b: float,
                      tol: float = 1e-10) -> float:
    def speed(t):
        u, udot = curve.state(t)
        g = surface_point(curve.host, u).metric.components
        return math.sqrt(udot @ g @ udot)

    return integrate_adaptive(speed, a, b, tol=tol)


def _natural_second_derivative(curve: SurfaceCurve, t: float):
    """u, du/ds, d2u/ds2, speed, and the point data at curve(t)."""
    u, udot, uddot = curve.state(t, 2)
    data, dg = point_with_metric_derivatives(curve.host, u)
    g = data.metric.components
    v2 = float(udot @ g @ udot)
    if v2 <= SPEED_FLOOR ** 2:
        raise ZeroSpeed(f"curve speed vanishes at t={t!r}")
    v = math.sqrt(v2)
    # dg_ij/dt along the curve
    dgdt = np.einsum("kij,k->ij", dg, udot)
    vdot = (0.5 * float(udot @ dgdt @ udot) + float(uddot @ g @ udot)) / v
    u_s = udot / v
    u_ss = uddot / v2 - udot * vdot / (v2 * v)
    return u, u_s, u_ss, v, data


def curve_curvatures(curve: SurfaceCurve, t: float) -> CurveCurvatures:
    """Normal and geodesic curvature and their Pythagorean total."""
    u, u_s, u_ss, _, data = _natural_second_derivative(curve, t)
    g = data.metric.components
    b = data.second_form
    k_norm = float(u_s @ b @ u_s) / float(u_s @ g @ u_s)
    vec = u_ss + np.einsum("kij,i,j->k", data.christoffel, u_s, u_s)
    k_geod = math.sqrt(max(float(vec @ g @ vec), 0.0))
    return CurveCurvatures(math.hypot(k_geod, k_norm), k_norm, k_geod)


def is_asymptotic(surface: Surface, u: Sequence[float],
                  a: Sequence[float]) -> bool:
    """True when the second form vanishes on the direction ``a``."""
    a = np.asarray(a, dtype=float)
    if float(np.linalg.norm(a)) == 0.0:
        raise ValueError("direction must be nonzero")
    data = surface_point(surface, u)
    b = data.second_form
    g = data.metric.components
    scale = float(np.max(np.abs(b))) * float(a @ g @ a)
    return abs(float(a @ b @ a)) <= ASYMPTOTIC_TOL * max(scale, 1e-300)


# ---------------------------------------------------------------------------
# Geodesics and transport
# ---------------------------------------------------------------------------

def geodesic_trace(surface: Surface, u0: Sequence[float],
                   udot0: Sequence[float], length: float,
                   steps: int = 1000) -> GeodesicTrace:
    """Integrate the geodesic from a point and direction over an arc length.

    The initial velocity is renormalized to unit length in the first form,
    so the trace parameter is arc length on the surface.
    """
    data = surface_point(surface, u0)
    udot0 = np.asarray(udot0, dtype=float)
    speed = math.sqrt(udot0 @ data.metric.components @ udot0)
    if speed <= 0.0:
        raise ValueError("initial direction must be nonzero")
    udot0 = udot0 / speed

    def rhs(_, state):
        u, w = state[:2], state[2:]
        gamma = surface_point(surface, u).christoffel
        return np.concatenate([w, -np.einsum("kij,i,j->k", gamma, w, w)])

    ts, states = rk4_trace(rhs, np.concatenate([np.asarray(u0, float),
                                                udot0]), 0.0, length, steps)
    coords = states[:, :2]
    vels = states[:, 2:]
    cart = np.array([surface.point(u) for u in coords])
    return GeodesicTrace(ts, coords, vels, cart)


def _transport_rhs(curve: SurfaceCurve, rank: str):
    def rhs(t, a):
        u, udot = curve.state(t)
        gamma = surface_point(curve.host, u).christoffel
        if rank == "vector":
            return -np.einsum("ijk,j,k->i", gamma, udot, a)
        # covector: da_i/dt = + Gamma^w_{q i} udot^q a_w
        return np.einsum("wqi,q,w->i", gamma, udot, a)

    return rhs


def inner_transport(curve: SurfaceCurve, a0: Sequence[float],
                    steps: int = 1000,
                    rank: str = "vector") -> TransportTrajectory:
    """Parallel transport of a vector (or covector) along a surface curve."""
    if rank not in ("vector", "covector"):
        raise TensorShapeError("rank must be 'vector' or 'covector'")
    if len(a0) != 2:
        raise TensorShapeError("transported object needs two components")
    t0, t1 = curve.domain
    ts, avals = rk4_trace(_transport_rhs(curve, rank), a0, t0, t1, steps)
    coords = np.array([curve.state(t)[0] for t in ts])
    cart = np.empty((len(ts), 3))
    for k in range(len(ts)):
        data = surface_point(curve.host, coords[k])
        comps = avals[k]
        if rank == "covector":
            comps = data.metric_inv.components @ comps
        cart[k] = comps @ data.tangents
    return TransportTrajectory(ts, coords, avals, cart)


# ---------------------------------------------------------------------------
# Holonomy
# ---------------------------------------------------------------------------

def _tangent_angle_increment(curve: SurfaceCurve, steps: int) -> float:
    """Net rotation of the curve tangent relative to a transported vector,
    continuously unwrapped along the curve."""
    t0, t1 = curve.domain
    u_start, _ = curve.state(t0)
    data = surface_point(curve.host, u_start)
    # seed with the unit tangent itself
    _, udot0 = curve.state(t0)
    g = data.metric.components
    a0 = udot0 / math.sqrt(udot0 @ g @ udot0)
    ts, avals = rk4_trace(_transport_rhs(curve, "vector"), a0, t0, t1, steps)

    def angle(t, a):
        u, udot = curve.state(t)
        point = surface_point(curve.host, u)
        g = point.metric.components
        omega = point.area_form
        return math.atan2(float(a @ omega @ udot), float(a @ g @ udot))

    psi_prev = angle(ts[0], avals[0])
    total = 0.0
    for t, a in zip(ts[1:], avals[1:]):
        psi = angle(t, a)
        delta = psi - psi_prev
        while delta > math.pi:
            delta -= 2.0 * math.pi
        while delta < -math.pi:
            delta += 2.0 * math.pi
        total += delta
        psi_prev = psi
    return total


def holonomy_angle(curve: SurfaceCurve, steps: int = 2000) -> float:
    """Rotation gained by a vector transported once around a closed curve.

    The curve must be traversed counterclockwise with respect to the
    oriented normal (enclosed region to the left); the angle is unwrapped
    by continuity against the curve tangent, so full turns are kept.
    """
    t0, t1 = curve.domain
    p0, _ = curve.state(t0)
    p1, _ = curve.state(t1)
    # periodic charts close a loop with a period offset in parameters, so
    # closure is tested on the embedded endpoints
    gap = float(np.max(np.abs(curve.host.point(p0) - curve.host.point(p1))))
    if gap > CLOSURE_TOL:
        raise NotClosed(f"endpoints differ by {gap!r} in space")
    return 2.0 * math.pi - _tangent_angle_increment(curve, steps)


def holonomy_by_area(surface: Surface, region, nodes: int = 64) -> float:
    """Integral of the Gaussian curvature over a parameter-space region.

    ``region`` is either a rectangle ((u1_lo, u1_hi), (u2_lo, u2_hi)) or a
    triangle given by three parameter-space vertices.
    """

    def integrand(u1, u2):
        data = surface_point(surface, (u1, u2))
        w = np.einsum("ij,jk->ki", data.second_form,
                      data.metric_inv.components)
        gauss = float(np.linalg.det(w))
        return gauss * math.sqrt(np.linalg.det(data.metric.components))

    region = [tuple(map(float, item)) for item in region]
    if len(region) == 2:
        return integrate_rectangle(integrand, region[0], region[1], nodes)
    if len(region) == 3:
        return integrate_triangle(integrand, region, nodes)
    raise ValueError("region must be a rectangle (two ranges) or a triangle "
                     "(three vertices)")


# ---------------------------------------------------------------------------
# Gauss-Bonnet balance
# ---------------------------------------------------------------------------

def _signed_geodesic_integrand(curve: SurfaceCurve, t: float) -> float:
    """omega(unit tangent, covariant derivative of the unit tangent) times
    the parametric speed; integrating over t gives the signed turn."""
    u, u_s, u_ss, v, data = _natural_second_derivative(curve, t)
    vec = u_ss + np.einsum("kij,i,j->k", data.christoffel, u_s, u_s)
    return float(u_s @ data.area_form @ vec) * v


def _side_endpoint_tangents(side: SurfaceCurve):
    t0, t1 = side.domain
    u0, d0 = side.state(t0)
    u1, d1 = side.state(t1)
    return (u0, d0), (u1, d1)


def gauss_bonnet_check(surface: Surface, polygon: Sequence[SurfaceCurve],
                       steps: int = 1000, region=None,
                       nodes: int = 64) -> GaussBonnetReport:
    """Balance the curvature integral, the boundary turn, and the corner
    angles of a curvilinear polygon against the full turn 2*pi.

    Sides must join continuously and run counterclockwise around the
    enclosed region (with respect to the oriented normal).  The enclosed
    region is taken to be the parameter-space triangle (three sides) or
    rectangle (four sides) spanned by the polygon vertices unless an
    explicit ``region`` is supplied.
    """
    if len(polygon) < 2:
        raise ValueError("polygon needs at least two sides")
    ends = [_side_endpoint_tangents(side) for side in polygon]
    count = len(polygon)
    for k in range(count):
        (_, _), (u_end, _) = ends[k]
        (u_next, _), (_, _) = ends[(k + 1) % count]
        gap = float(np.max(np.abs(surface.point(u_end)
                                  - surface.point(u_next))))
        if gap > VERTEX_GAP_TOL:
            raise NotClosed(
                f"side {k} ends at {tuple(u_end)} but side "
                f"{(k + 1) % count} starts at {tuple(u_next)}")

    if region is None:
        vertices = [ends[k][0][0] for k in range(count)]
        if count == 3:
            region = vertices
        elif count == 4:
            us = [v[0] for v in vertices]
            vs = [v[1] for v in vertices]
            region = ((min(us), max(us)), (min(vs), max(vs)))
        else:
            raise ValueError("cannot infer the region for this polygon; "
                             "pass region= explicitly")

    area_term = holonomy_by_area(surface, region, nodes)

    geodesic_term = 0.0
    for side in polygon:
        t0, t1 = side.domain
        panels = max(4, steps // 64)
        h = (t1 - t0) / panels
        for p in range(panels):
            geodesic_term += integrate_gl(
                lambda t: _signed_geodesic_integrand(side, t),
                t0 + p * h, t0 + (p + 1) * h, nodes=16)

    angle_sum = 0.0
    for k in range(count):
        (_, _), (u_end, d_in) = ends[k]
        (_, d_out), (_, _) = ends[(k + 1) % count]
        data = surface_point(surface, u_end)
        g = data.metric.components
        omega = data.area_form
        angle_sum += math.atan2(float(d_in @ omega @ d_out),
                                float(d_in @ g @ d_out))

    residual = abs(area_term + geodesic_term + angle_sum - 2.0 * math.pi)
    return GaussBonnetReport(area_term, geodesic_term, angle_sum, residual)
