import itertools
import math

import numpy as np
import pytest

from geodetica import expr
from geodetica.errors import SingularPoint
from geodetica.surfaces import (Surface, curvature, curvature_from_scalar,
                                invariants_by_forms, ricci_tensor,
                                riemann_tensor, scalar_curvature,
                                surface_covariant_derivative, surface_point)
from helpers import (cylinder_surface, graph_surface, plane_surface,
                     random_polynomial, sphere_surface, torus_surface)


def sphere_points(rng, count):
    return [(rng.uniform(0.4, math.pi - 0.4), rng.uniform(-3.0, 3.0))
            for _ in range(count)]


class TestSurfacePoint:
    def test_plane(self):
        data = surface_point(plane_surface(), (0.3, -0.8))
        assert np.allclose(data.metric.components, np.eye(2))
        assert np.allclose(data.second_form, 0.0)
        assert np.allclose(data.christoffel, 0.0)
        assert np.allclose(data.normal, [0.0, 0.0, 1.0])

    def test_sphere_metric(self):
        radius = 1.7
        surface = sphere_surface(radius)
        theta = 0.9
        data = surface_point(surface, (theta, 2.3))
        expected = np.diag([radius ** 2,
                            radius ** 2 * math.sin(theta) ** 2])
        assert np.max(np.abs(data.metric.components - expected)) < 1e-12

    def test_sphere_first_form_determinant_at_equator(self):
        radius = 1.7
        surface = sphere_surface(radius)
        data = surface_point(surface, (math.pi / 2.0, 0.4))
        det = np.linalg.det(data.metric.components)
        assert det == pytest.approx(radius ** 4, rel=1e-12)

    def test_pole_is_singular(self):
        with pytest.raises(SingularPoint):
            surface_point(sphere_surface(), (0.0, 0.0))

    def test_area_form(self):
        surface = sphere_surface(2.0)
        theta = 1.1
        data = surface_point(surface, (theta, 0.0))
        expected = 4.0 * math.sin(theta)
        assert data.area_form[0, 1] == pytest.approx(expected, rel=1e-12)
        assert data.area_form[1, 0] == pytest.approx(-expected, rel=1e-12)

    def test_normal_is_unit_and_orthogonal(self):
        surface = torus_surface()
        rng = np.random.default_rng(0)
        for _ in range(10):
            u = rng.uniform(-3.0, 3.0, size=2)
            data = surface_point(surface, u)
            assert np.linalg.norm(data.normal) == pytest.approx(1.0,
                                                                abs=1e-12)
            for i in range(2):
                assert abs(data.tangents[i] @ data.normal) < 1e-10


class TestCurvature:
    def test_sphere(self):
        for radius in (0.5, 1.0, 2.0):
            surface = sphere_surface(radius)
            rep = curvature(surface, (1.1, 0.7))
            assert rep.gaussian == pytest.approx(1.0 / radius ** 2,
                                                 abs=1e-9)
            assert abs(rep.mean) == pytest.approx(1.0 / radius, abs=1e-9)
            assert rep.umbilical
            assert rep.point_class == "elliptic"

    def test_cylinder(self):
        a = 1.5
        rep = curvature(cylinder_surface(a), (0.4, 2.0))
        assert abs(rep.gaussian) < 1e-10
        assert abs(rep.mean) == pytest.approx(1.0 / (2.0 * a), abs=1e-9)
        assert rep.point_class == "parabolic"

    def test_torus_sign_change(self):
        surface = torus_surface(2.0, 0.5)
        outer = curvature(surface, (0.0, 1.0))
        inner = curvature(surface, (math.pi, 1.0))
        assert outer.gaussian > 0.0
        assert inner.gaussian < 0.0
        assert outer.point_class == "elliptic"
        assert inner.point_class == "hyperbolic"

    def test_invariant_routes_agree(self):
        rng = np.random.default_rng(1)
        surfaces = [sphere_surface(1.3), cylinder_surface(0.8),
                    torus_surface(), graph_surface("u^2/2 - v^2/3 + u*v/4")]
        for surface in surfaces:
            for _ in range(5):
                u = (rng.uniform(0.5, 2.0), rng.uniform(-2.0, 2.0))
                rep = curvature(surface, u)
                mean_f, gauss_f = invariants_by_forms(surface, u)
                assert abs(rep.mean - mean_f) < 1e-10
                assert abs(rep.gaussian - gauss_f) < 1e-10

    def test_principal_directions_orthonormal(self):
        surface = torus_surface()
        rep = curvature(surface, (0.9, 0.4))
        d1, d2 = rep.directions
        assert np.linalg.norm(d1) == pytest.approx(1.0, abs=1e-8)
        assert np.linalg.norm(d2) == pytest.approx(1.0, abs=1e-8)
        assert abs(d1 @ d2) < 1e-8
        assert not rep.umbilical

    def test_umbilical_directions(self):
        rep = curvature(sphere_surface(), (1.0, 0.5))
        assert rep.umbilical
        d1, d2 = rep.directions
        assert np.linalg.norm(d1) == pytest.approx(1.0, abs=1e-8)
        assert abs(d1 @ d2) < 1e-8

    def test_orientation_flip(self):
        plus = sphere_surface(1.0, orientation=1)
        minus = sphere_surface(1.0, orientation=-1)
        u = (1.2, 0.3)
        rep_p = curvature(plus, u)
        rep_m = curvature(minus, u)
        b_p = surface_point(plus, u).second_form
        b_m = surface_point(minus, u).second_form
        assert np.allclose(b_p, -b_m)
        assert rep_p.k1 == pytest.approx(-rep_m.k2, abs=1e-12)
        assert rep_p.k2 == pytest.approx(-rep_m.k1, abs=1e-12)
        assert rep_p.mean == pytest.approx(-rep_m.mean, abs=1e-12)
        assert rep_p.gaussian == pytest.approx(rep_m.gaussian, abs=1e-12)


class TestStructuralResiduals:
    SURFACES = None

    def surfaces(self):
        if TestStructuralResiduals.SURFACES is None:
            rng = np.random.default_rng(2)
            poly = random_polynomial(rng, ("u", "v"), degree=3, terms=4)
            TestStructuralResiduals.SURFACES = [
                sphere_surface(1.3), cylinder_surface(0.9), torus_surface(),
                graph_surface(poly)]
        return TestStructuralResiduals.SURFACES

    def points(self, rng, surface, count=4):
        out = []
        for _ in range(count):
            u1 = rng.uniform(*surface.box[0])
            u2 = rng.uniform(*surface.box[1])
            if surface.params[0] == "theta":
                u1 = rng.uniform(0.4, math.pi - 0.4)
            if surface.params[0] in ("u",):
                u1 = rng.uniform(-0.9, 0.9)
                u2 = rng.uniform(-0.9, 0.9)
            out.append((u1, u2))
        return out

    def test_gauss_and_codazzi(self):
        rng = np.random.default_rng(3)
        for surface in self.surfaces():
            for u in self.points(rng, surface):
                rep = curvature(surface, u)
                assert rep.gauss_residual < 1e-8
                assert rep.codazzi_residual < 1e-7

    def test_riemann_symmetries(self):
        rng = np.random.default_rng(4)
        for surface in self.surfaces():
            for u in self.points(rng, surface, count=3):
                riemann = riemann_tensor(surface, u).components
                g = surface_point(surface, u).metric.components
                lowered = np.einsum("krij,kq->qrij", riemann, g)
                scale = max(np.max(np.abs(lowered)), 1.0)
                # antisymmetry in the last pair
                assert np.max(np.abs(riemann + riemann.transpose(0, 1, 3, 2))
                              ) < 1e-8 * scale
                # antisymmetry of the lowered first pair
                assert np.max(np.abs(lowered + lowered.transpose(1, 0, 2, 3))
                              ) < 1e-8 * scale
                # pair exchange
                assert np.max(np.abs(lowered - lowered.transpose(2, 3, 0, 1))
                              ) < 1e-8 * scale
                # cyclic sum over the lower indices
                cyclic = (riemann + riemann.transpose(0, 3, 1, 2)
                          + riemann.transpose(0, 2, 3, 1))
                assert np.max(np.abs(cyclic)) < 1e-8 * scale

    def test_two_riemann_routes_agree(self):
        rng = np.random.default_rng(5)
        for surface in self.surfaces():
            for u in self.points(rng, surface, count=3):
                direct = riemann_tensor(surface, u).components
                rebuilt = curvature_from_scalar(surface, u).components
                scale = max(np.max(np.abs(direct)), 1e-6)
                assert np.max(np.abs(direct - rebuilt)) < 1e-8 * scale

    def test_sphere_component_value(self):
        surface = sphere_surface(1.0)
        u = (math.pi / 2.0, 0.8)
        direct = riemann_tensor(surface, u).components
        rebuilt = curvature_from_scalar(surface, u).components
        assert direct[0, 1, 0, 1] == pytest.approx(1.0, abs=1e-10)
        assert rebuilt[0, 1, 0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_ricci_proportional_to_metric(self):
        rng = np.random.default_rng(6)
        for surface in self.surfaces():
            for u in self.points(rng, surface, count=3):
                ricci = ricci_tensor(surface, u).components
                g = surface_point(surface, u).metric.components
                r = scalar_curvature(surface, u)
                assert np.max(np.abs(ricci - 0.5 * r * g)) < 1e-8

    def test_plane_riemann_zero(self):
        direct = riemann_tensor(plane_surface(), (0.2, 0.4)).components
        rebuilt = curvature_from_scalar(plane_surface(), (0.2, 0.4)).components
        assert np.max(np.abs(direct)) == 0.0
        assert np.max(np.abs(rebuilt)) == 0.0


class TestSurfaceCovariantDerivative:
    def test_metric_autoparallel_on_sphere(self):
        surface = sphere_surface(1.0)
        comps = np.array(
            [[expr.parse("sin(theta)^0"), expr.parse("0")],
             [expr.parse("0"), expr.parse("sin(theta)^2")]], dtype=object)
        out = surface_covariant_derivative(comps, (0, 2), surface,
                                           (1.1, 0.6))
        assert np.max(np.abs(out.components)) < 1e-10

    def test_area_form_autoparallel_on_sphere(self):
        surface = sphere_surface(1.0)
        comps = np.array(
            [[expr.parse("0"), expr.parse("sin(theta)")],
             [expr.parse("-sin(theta)"), expr.parse("0")]], dtype=object)
        out = surface_covariant_derivative(comps, (0, 2), surface,
                                           (0.9, 1.4))
        assert np.max(np.abs(out.components)) < 1e-9

    def test_scalar_gives_partials(self):
        surface = sphere_surface(1.0)
        comp = np.empty((), dtype=object)
        comp[()] = expr.parse("theta^2*cos(phi)")
        u = (1.2, 0.5)
        out = surface_covariant_derivative(comp, (0, 0), surface, u)
        jet = expr.eval_jet(comp[()], surface.params, u, 1)
        assert np.allclose(out.components, jet.grad, atol=1e-14)
