"""Parametric curves in Euclidean 3-space: Frenet frames, arc length,
natural reparametrization, evolutes, evolvents, and the kinematic split
of acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import expr
from .errors import (DegenerateCurvature, NonPlanarCurve, OutOfDomain,
                     SingularPoint)
from .numerics import integrate_adaptive, integrate_gl

__all__ = [
    "SpaceCurve", "FrenetFrame", "Kinematics", "SampledCurve",
    "NaturalParametrization",
    "tangent", "is_regular", "arc_length", "natural_reparametrize",
    "frenet", "curvature_center", "evolute", "evolvent", "kinematics",
]

SPEED_FLOOR = 1e-9       # below this |dr/dt| the point counts as singular
CURVATURE_FLOOR = 1e-8   # below this k the normal direction is meaningless


@dataclass(frozen=True)
class SpaceCurve:
    """Curve r(t) given by three coordinate expressions of one variable."""

    x: expr.Expression
    y: expr.Expression
    z: expr.Expression
    domain: tuple[float, float]
    var: str = "t"

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy t_min < t_max")
        for component in (self.x, self.y, self.z):
            extra = set(expr.free_variables(component)) - {self.var}
            if extra:
                raise ValueError(
                    f"curve components may only depend on {self.var!r}; "
                    f"found {sorted(extra)}")

    @classmethod
    def from_strings(cls, x: str, y: str, z: str,
                     domain: tuple[float, float], var: str = "t"):
        return cls(expr.parse(x), expr.parse(y), expr.parse(z),
                   tuple(domain), var)

    def check_param(self, t: float):
        lo, hi = self.domain
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise OutOfDomain(f"parameter {t} outside [{lo}, {hi}]")

    def derivatives(self, t: float, order: int = 3):
        """Position and the first ``order`` t-derivatives as stacked vectors."""
        self.check_param(t)
        jets = [expr.eval_jet(c, (self.var,), (t,), order)
                for c in (self.x, self.y, self.z)]
        r = np.array([j.value for j in jets])
        d1 = np.array([j.grad[0] for j in jets])
        out = [r, d1]
        if order >= 2:
            out.append(np.array([j.hess[0][0] for j in jets]))
        if order >= 3:
            out.append(np.array([j.third[0][0][0] for j in jets]))
        return out

    def position(self, t: float) -> np.ndarray:
        return self.derivatives(t, 1)[0]


@dataclass(frozen=True)
class FrenetFrame:
    """Orthonormal right triple with curvature and torsion at one point."""

    tangent: np.ndarray
    normal: np.ndarray
    binormal: np.ndarray
    curvature: float
    torsion: float


@dataclass(frozen=True)
class Kinematics:
    velocity: np.ndarray
    acceleration: np.ndarray
    tangential: np.ndarray
    centripetal: np.ndarray


@dataclass(frozen=True)
class SampledCurve:
    params: np.ndarray
    points: np.ndarray


def tangent(curve: SpaceCurve, t: float) -> np.ndarray:
    """Velocity vector dr/dt; zero exactly at singular points."""
    return curve.derivatives(t, 1)[1]


def is_regular(curve: SpaceCurve, t: float) -> bool:
    return float(np.linalg.norm(tangent(curve, t))) > SPEED_FLOOR


def _speed(curve: SpaceCurve, t: float) -> float:
    return float(np.linalg.norm(tangent(curve, t)))


def arc_length(curve: SpaceCurve, a: float, b: float,
               tol: float = 1e-10) -> float:
    """Length of the arc between parameters a and b (adaptive quadrature)."""
    curve.check_param(a)
    curve.check_param(b)
    return integrate_adaptive(lambda t: _speed(curve, t), a, b, tol=tol)


class NaturalParametrization:
    """Arc-length reparametrization built from a cumulative length table.

    The inverse map t(s) uses monotone cubic interpolation over ``samples``
    grid points, so the unit-speed property holds to about 1e-6 rather
    than exactly.
    """

    def __init__(self, curve: SpaceCurve, samples: int = 1024):
        lo, hi = curve.domain
        grid = np.linspace(lo, hi, samples)
        scan = np.sort(np.concatenate([grid, 0.5 * (grid[:-1] + grid[1:])]))
        speeds = np.array([_speed(curve, t) for t in scan])
        if np.min(speeds) <= SPEED_FLOOR:
            bad = scan[int(np.argmin(speeds))]
            raise SingularPoint(
                f"curve is singular near t={bad!r}; cannot reparametrize")
        cumulative = np.empty(samples)
        cumulative[0] = 0.0
        for k in range(samples - 1):
            cumulative[k + 1] = cumulative[k] + integrate_gl(
                lambda t: _speed(curve, t), grid[k], grid[k + 1], nodes=16)
        self.curve = curve
        self.length = float(cumulative[-1])
        self._t_of_s = PchipInterpolator(cumulative, grid)
        self._s_of_t = PchipInterpolator(grid, cumulative)

    def t_of_s(self, s: float) -> float:
        if not (-1e-9 <= s <= self.length + 1e-9):
            raise OutOfDomain(f"arc length {s} outside [0, {self.length}]")
        return float(self._t_of_s(min(max(s, 0.0), self.length)))

    def s_of_t(self, t: float) -> float:
        return float(self._s_of_t(t))

    def position(self, s: float) -> np.ndarray:
        return self.curve.position(self.t_of_s(s))

    def tangent(self, s: float) -> np.ndarray:
        """Unit tangent dr/ds."""
        d = tangent(self.curve, self.t_of_s(s))
        return d / np.linalg.norm(d)


def natural_reparametrize(curve: SpaceCurve,
                          samples: int = 1024) -> NaturalParametrization:
    return NaturalParametrization(curve, samples)


def _frame_derivatives(curve: SpaceCurve, t: float):
    """Arc-length derivatives of the unit tangent up to second order."""
    _, d1, d2, d3 = curve.derivatives(t, 3)
    v = float(np.linalg.norm(d1))
    if v <= SPEED_FLOOR:
        raise SingularPoint(f"zero velocity at t={t!r}")
    vdot = float(d1 @ d2) / v
    tau = d1 / v
    # dtau/dt and its t-derivative
    w = d2 / v - d1 * (d1 @ d2) / v ** 3
    dw = (d3 / v - d2 * vdot / v ** 2
          - (d2 * (d1 @ d2) + d1 * ((d2 @ d2) + (d1 @ d3))) / v ** 3
          + 3.0 * d1 * (d1 @ d2) * vdot / v ** 4)
    tau_s = w / v                       # dtau/ds
    tau_ss = dw / v ** 2 - w * vdot / v ** 3
    return tau, tau_s, tau_ss, v, vdot


def frenet(curve: SpaceCurve, t: float) -> FrenetFrame:
    """Frame, curvature, and torsion from exact jet derivatives."""
    tau, tau_s, tau_ss, _, _ = _frame_derivatives(curve, t)
    k = float(np.linalg.norm(tau_s))
    if k <= CURVATURE_FLOOR:
        raise DegenerateCurvature(
            f"curvature {k!r} below {CURVATURE_FLOOR} at t={t!r}",
            tangent=tau)
    normal = tau_s / k
    binormal = np.cross(tau, normal)
    k_s = float(tau_s @ tau_ss) / k
    normal_s = tau_ss / k - tau_s * k_s / k ** 2
    b_s = np.cross(tau, normal_s)
    torsion = -float(b_s @ normal)
    return FrenetFrame(tau, normal, binormal, k, torsion)


def curvature_center(curve: SpaceCurve, t: float) -> np.ndarray:
    """Point offset from the curve by the curvature radius along the normal."""
    frame = frenet(curve, t)
    return curve.position(t) + frame.normal / frame.curvature


def evolute(curve: SpaceCurve, samples: int = 256) -> SampledCurve:
    """Curvature centers sampled along the whole parameter range."""
    lo, hi = curve.domain
    params = np.linspace(lo, hi, samples)
    points = np.array([curvature_center(curve, t) for t in params])
    return SampledCurve(params, points)


def _fit_plane(points: np.ndarray):
    center = points.mean(axis=0)
    _, singular, vh = np.linalg.svd(points - center)
    normal = vh[-1]
    deviation = float(np.max(np.abs((points - center) @ normal)))
    return center, normal, deviation


def evolvent(curve: SpaceCurve, c: float, samples: int = 256) -> SampledCurve:
    """One member of the evolvent family of a planar curve.

    The constant ``c`` selects the family member: the point at arc length
    s = c coincides with the curve point there.
    """
    lo, hi = curve.domain
    probe = np.array([curve.position(t)
                      for t in np.linspace(lo, hi, max(samples, 64))])
    bbox = float(np.linalg.norm(probe.max(axis=0) - probe.min(axis=0)))
    _, _, deviation = _fit_plane(probe)
    if deviation > 1e-8 * max(bbox, 1.0):
        raise NonPlanarCurve(
            f"curve deviates from a plane by {deviation!r}")
    natural = natural_reparametrize(curve)
    ss = np.linspace(0.0, natural.length, samples)
    points = np.array([natural.position(s) + (c - s) * natural.tangent(s)
                       for s in ss])
    return SampledCurve(ss, points)


def kinematics(curve: SpaceCurve, t: float) -> Kinematics:
    """Split of the acceleration into tangential and centripetal parts."""
    _, d1, d2 = curve.derivatives(t, 2)
    v = float(np.linalg.norm(d1))
    if v <= SPEED_FLOOR:
        raise SingularPoint(f"zero velocity at t={t!r}")
    tau = d1 / v
    vdot = float(d1 @ d2) / v
    tangential = vdot * tau
    try:
        frame = frenet(curve, t)
        centripetal = frame.curvature * v * v * frame.normal
    except DegenerateCurvature:
        centripetal = d2 - tangential
    return Kinematics(d1, d2, tangential, centripetal)
