"""Parametric surfaces in Euclidean 3-space: fundamental forms, shape
operator with principal curvatures, inner connection, Riemann/Ricci/scalar
curvature, and the structural consistency residuals relating them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr
from .errors import OutOfDomain, SingularPoint, TensorShapeError
from .tensor import TENSOR, Tensor

__all__ = [
    "Surface", "SurfacePointData", "CurvatureReport",
    "surface_point", "curvature", "invariants_by_forms",
    "riemann_tensor", "curvature_from_scalar",
    "surface_covariant_derivative",
]

RANK_FLOOR = 1e-12
# |k1 - k2| = 2 sqrt(trace^2/4 - det) amplifies rounding to ~sqrt(eps), so
# the umbilical test cannot be tighter than ~1e-8 in double precision
UMBILICAL_TOL = 1e-7
PARABOLIC_TOL = 1e-10

_AREA_SYMBOL = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class Surface:
    """Two-parameter map into E^3 with a validity rectangle and a choice
    of normal direction (orientation +1 or -1)."""

    params: tuple[str, str]
    maps: tuple[expr.Expression, expr.Expression, expr.Expression]
    box: tuple[tuple[float, float], tuple[float, float]]
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        allowed = set(self.params)
        for m in self.maps:
            extra = set(expr.free_variables(m)) - allowed
            if extra:
                raise ValueError(f"map uses undeclared names {sorted(extra)}")

    @classmethod
    def from_strings(cls, params: Sequence[str], maps: Sequence[str],
                     box, orientation: int = 1) -> "Surface":
        return cls(tuple(params), tuple(expr.parse(m) for m in maps),
                   tuple(tuple(map(float, b)) for b in box), orientation)

    def check_point(self, u: Sequence[float]):
        if len(u) != 2:
            raise OutOfDomain("surface points have two coordinates")
        for value, (lo, hi), name in zip(u, self.box, self.params):
            if not (lo - 1e-12 <= value <= hi + 1e-12):
                raise OutOfDomain(
                    f"{name}={value!r} outside box [{lo}, {hi}]")

    def jets(self, u: Sequence[float], order: int):
        return [expr.eval_jet(m, self.params, u, order) for m in self.maps]

    def point(self, u: Sequence[float]) -> np.ndarray:
        self.check_point(u)
        env = dict(zip(self.params, u))
        return np.array([expr.eval_scalar(m, env) for m in self.maps])


@dataclass(frozen=True)
class SurfacePointData:
    """First-order data of a surface at one point.

    ``tangents[i]`` is the i-th coordinate tangent vector in Cartesian
    components; ``second_form`` is the normal projection of the second
    derivatives; ``christoffel[k][i][j]`` is symmetric in (i, j);
    ``area_form`` is orientation * sqrt(det g) times the 2-d permutation
    symbol.
    """

    tangents: np.ndarray
    normal: np.ndarray
    metric: Tensor
    metric_inv: Tensor
    second_form: np.ndarray
    christoffel: np.ndarray
    area_form: np.ndarray


@dataclass(frozen=True)
class CurvatureReport:
    k1: float
    k2: float
    mean: float
    gaussian: float
    directions: tuple[np.ndarray, np.ndarray]
    umbilical: bool
    point_class: str
    scalar_curvature: float
    gauss_residual: float
    codazzi_residual: float


# ---------------------------------------------------------------------------
# Point data
# ---------------------------------------------------------------------------

def _first_order(surface: Surface, u, order: int = 2):
    surface.check_point(u)
    jets = surface.jets(u, order)
    tangents = np.array([[jets[q].grad[i] for q in range(3)]
                         for i in range(2)])
    cross = np.cross(tangents[0], tangents[1])
    norm = float(np.linalg.norm(cross))
    if norm < RANK_FLOOR:
        raise SingularPoint(f"rank drop at {tuple(u)}")
    normal = surface.orientation * cross / norm
    hess = np.array([jets[q].hess for q in range(3)])  # [q][i][j]
    g = tangents @ tangents.T
    dg = np.einsum("qki,jq->kij", hess, tangents) \
        + np.einsum("iq,qkj->kij", tangents, hess)
    g_inv = np.linalg.inv(g)
    b = np.einsum("qij,q->ij", hess, normal)
    return jets, tangents, normal, g, g_inv, dg, b


def _christoffel(g_inv, dg):
    braces = (np.einsum("irj->ijr", dg) + np.einsum("jir->ijr", dg)
              - np.einsum("rij->ijr", dg))
    return 0.5 * np.einsum("kr,ijr->kij", g_inv, braces)


def point_with_metric_derivatives(surface: Surface, u: Sequence[float]):
    """Point data plus the exact metric partials dg[k][i][j]."""
    _, tangents, normal, g, g_inv, dg, b = _first_order(surface, u)
    gamma = _christoffel(g_inv, dg)
    area = surface.orientation * math.sqrt(np.linalg.det(g)) * _AREA_SYMBOL
    data = SurfacePointData(
        tangents=tangents,
        normal=normal,
        metric=Tensor(2, 0, 2, g),
        metric_inv=Tensor(2, 2, 0, g_inv),
        second_form=b,
        christoffel=gamma,
        area_form=area,
    )
    return data, dg


def surface_point(surface: Surface, u: Sequence[float]) -> SurfacePointData:
    """Tangent frame, normal, both fundamental forms, connection, area form."""
    return point_with_metric_derivatives(surface, u)[0]


def shape_operator(surface: Surface, u: Sequence[float]) -> np.ndarray:
    """Matrix W[k][i] of the operator obtained by raising one index of the
    second fundamental form."""
    data = surface_point(surface, u)
    return np.einsum("ij,jk->ki", data.second_form,
                     data.metric_inv.components)


# ---------------------------------------------------------------------------
# Higher-order data (third derivatives of the maps)
# ---------------------------------------------------------------------------

def _second_order(surface: Surface, u):
    """Adds Christoffel derivatives and covariant derivative of the second
    form, both exact from order-3 jets."""
    jets, tangents, normal, g, g_inv, dg, b = _first_order(surface, u, 3)
    hess = np.array([jets[q].hess for q in range(3)])
    third = np.array([jets[q].third for q in range(3)])  # [q][a][b][c]

    # ddg[l][k][i][j] = d^2 g_ij / du^l du^k
    ddg = (np.einsum("qlki,jq->lkij", third, tangents)
           + np.einsum("qki,qlj->lkij", hess, hess)
           + np.einsum("qli,qkj->lkij", hess, hess)
           + np.einsum("iq,qlkj->lkij", tangents, third))
    dginv = -np.einsum("ka,lab,br->lkr", g_inv, dg, g_inv)

    braces = (np.einsum("irj->ijr", dg) + np.einsum("jir->ijr", dg)
              - np.einsum("rij->ijr", dg))
    dbraces = (np.einsum("lirj->lijr", ddg) + np.einsum("ljir->lijr", ddg)
               - np.einsum("lrij->lijr", ddg))
    gamma = 0.5 * np.einsum("kr,ijr->kij", g_inv, braces)
    dgamma = 0.5 * (np.einsum("lkr,ijr->lkij", dginv, braces)
                    + np.einsum("kr,lijr->lkij", g_inv, dbraces))

    # db[i][j][k] = d b_jk / du^i, with dn from the derivational formulas
    b_up = np.einsum("ij,jk->ki", b, g_inv)        # b^k_i
    dn = -np.einsum("ki,kq->iq", b_up, tangents)   # dn[i] = d n / du^i
    db = np.einsum("qijk,q->ijk", third, normal) \
        + np.einsum("qjk,iq->ijk", hess, dn)
    # nabla_i b_jk
    nabla_b = db - np.einsum("qij,qk->ijk", gamma, b) \
        - np.einsum("qik,jq->ijk", gamma, b)
    return tangents, normal, g, g_inv, b, gamma, dgamma, nabla_b


def _riemann_components(gamma, dgamma):
    # R^k_{rij} = d_i Gamma^k_{jr} - d_j Gamma^k_{ir}
    #             + Gamma^k_{iq} Gamma^q_{jr} - Gamma^k_{jq} Gamma^q_{ir}
    term = np.einsum("ikjr->krij", dgamma) - np.einsum("jkir->krij", dgamma)
    quad = np.einsum("kiq,qjr->krij", gamma, gamma) \
        - np.einsum("kjq,qir->krij", gamma, gamma)
    return term + quad


def riemann_tensor(surface: Surface, u: Sequence[float]) -> Tensor:
    """Curvature tensor of the inner connection, components R^k_{rij}."""
    _, _, _, _, _, gamma, dgamma, _ = _second_order(surface, u)
    return Tensor(2, 1, 3, _riemann_components(gamma, dgamma))


def curvature_from_scalar(surface: Surface, u: Sequence[float]) -> Tensor:
    """Curvature tensor rebuilt from the Gaussian curvature alone.

    Uses R_scalar = 2 K with K from the shape operator, so the result is an
    independent cross-check of ``riemann_tensor``.
    """
    data = surface_point(surface, u)
    w = np.einsum("ij,jk->ki", data.second_form, data.metric_inv.components)
    r_scalar = 2.0 * float(np.linalg.det(w))
    g = data.metric.components
    delta = np.eye(2)
    comp = 0.5 * r_scalar * (np.einsum("ki,rj->krij", delta, g)
                             - np.einsum("kj,ri->krij", delta, g))
    return Tensor(2, 1, 3, comp)


def ricci_tensor(surface: Surface, u: Sequence[float]) -> Tensor:
    riemann = riemann_tensor(surface, u).components
    return Tensor(2, 0, 2, np.einsum("krkj->rj", riemann))


def scalar_curvature(surface: Surface, u: Sequence[float]) -> float:
    data = surface_point(surface, u)
    ricci = ricci_tensor(surface, u).components
    return float(np.einsum("rj,rj->", ricci, data.metric_inv.components))


def invariants_by_forms(surface: Surface, u: Sequence[float]):
    """Mean and Gaussian curvature from the two quadratic forms directly."""
    data = surface_point(surface, u)
    (e, f), (_, g) = data.metric.components
    (el, em), (_, en) = data.second_form
    den = e * g - f * f
    mean = 0.5 * (e * en + g * el - 2.0 * f * em) / den
    gauss = (el * en - em * em) / den
    return mean, gauss


def curvature(surface: Surface, u: Sequence[float]) -> CurvatureReport:
    """Principal curvatures, directions, invariants, and the consistency
    residuals tying the inner curvature to the shape operator."""
    tangents, normal, g, g_inv, b, gamma, dgamma, nabla_b = \
        _second_order(surface, u)
    w = np.einsum("ij,jk->ki", b, g_inv)
    trace = float(np.trace(w))
    det = float(np.linalg.det(w))
    disc = max(trace * trace / 4.0 - det, 0.0)
    root = math.sqrt(disc)
    k1 = trace / 2.0 + root
    k2 = trace / 2.0 - root
    mean = 0.5 * (k1 + k2)
    gauss = k1 * k2

    umbilical = abs(k1 - k2) < UMBILICAL_TOL * max(1.0, abs(k1) + abs(k2))
    if umbilical:
        inner_dirs = _orthonormal_coordinate_directions(g)
    else:
        inner_dirs = (_eigendirection(w, k1, g), _eigendirection(w, k2, g))
    directions = tuple(d @ tangents for d in inner_dirs)

    if gauss > PARABOLIC_TOL:
        point_class = "elliptic"
    elif gauss < -PARABOLIC_TOL:
        point_class = "hyperbolic"
    else:
        point_class = "parabolic"

    riemann = _riemann_components(gamma, dgamma)
    ricci = np.einsum("krkj->rj", riemann)
    r_scalar = float(np.einsum("rj,rj->", ricci, g_inv))
    gauss_residual = abs(r_scalar - 2.0 * gauss)
    codazzi_residual = float(np.max(np.abs(
        nabla_b - np.einsum("ijk->jik", nabla_b))))

    return CurvatureReport(
        k1=k1, k2=k2, mean=mean, gaussian=gauss,
        directions=directions, umbilical=umbilical, point_class=point_class,
        scalar_curvature=r_scalar, gauss_residual=gauss_residual,
        codazzi_residual=codazzi_residual,
    )


def _g_normalize(v, g):
    return v / math.sqrt(v @ g @ v)


def _eigendirection(w, eigenvalue, g):
    m = w - eigenvalue * np.eye(2)
    # kernel direction of a (numerically) rank-1 2x2 matrix
    rows = [m[0], m[1]]
    row = max(rows, key=lambda r: float(np.linalg.norm(r)))
    v = np.array([-row[1], row[0]])
    if np.linalg.norm(v) < 1e-14:
        v = np.array([1.0, 0.0])
    return _g_normalize(v, g)


def _orthonormal_coordinate_directions(g):
    v1 = _g_normalize(np.array([1.0, 0.0]), g)
    raw = np.array([0.0, 1.0])
    raw = raw - (raw @ g @ v1) * v1
    return v1, _g_normalize(raw, g)


# ---------------------------------------------------------------------------
# Covariant differentiation of inner expression fields
# ---------------------------------------------------------------------------

def surface_covariant_derivative(components, rank: tuple[int, int],
                                 surface: Surface,
                                 u: Sequence[float]) -> Tensor:
    """Covariant derivative of an inner tensor field given by expressions
    of the surface parameters; the new lower index comes last."""
    r, s = rank
    comp = np.asarray(components, dtype=object)
    expected = (2,) * (r + s)
    if comp.shape != expected:
        raise TensorShapeError(
            f"field of type {rank} needs component shape {expected}")
    data = surface_point(surface, u)
    values = np.empty(comp.shape)
    partials = np.empty(comp.shape + (2,))
    for index in np.ndindex(comp.shape):
        jet = expr.eval_jet(comp[index], surface.params, u, 1)
        values[index] = jet.value
        partials[index] = jet.grad
    gamma = data.christoffel
    result = np.moveaxis(partials, -1, 0)
    for m in range(r):
        term = np.tensordot(gamma, values, axes=(2, m))
        term = np.moveaxis(term, 0, m + 1)
        result = result + term
    for n in range(s):
        term = np.tensordot(gamma, values, axes=(0, r + n))
        term = np.moveaxis(term, 1, r + n + 1)
        result = result - term
    return Tensor(2, r, s + 1, np.moveaxis(result, 0, -1), TENSOR)
