"""Shared fixtures: reference surfaces and finite-difference oracles."""

import math

import numpy as np

from geodetica import curves, surfaces


def sphere_surface(radius=1.0, orientation=1):
    r = repr(float(radius))
    return surfaces.Surface.from_strings(
        ("theta", "phi"),
        (f"{r}*sin(theta)*cos(phi)",
         f"{r}*sin(theta)*sin(phi)",
         f"{r}*cos(theta)"),
        ((0.0, math.pi), (-12.0, 12.0)),
        orientation,
    )


def cylinder_surface(radius=1.0):
    r = repr(float(radius))
    return surfaces.Surface.from_strings(
        ("h", "phi"),
        (f"{r}*cos(phi)", f"{r}*sin(phi)", "h"),
        ((-10.0, 10.0), (-12.0, 12.0)),
    )


def torus_surface(ring=2.0, tube=0.5):
    rr, tt = repr(float(ring)), repr(float(tube))
    return surfaces.Surface.from_strings(
        ("a", "b"),
        (f"({rr}+{tt}*cos(a))*cos(b)",
         f"({rr}+{tt}*cos(a))*sin(b)",
         f"{tt}*sin(a)"),
        ((-12.0, 12.0), (-12.0, 12.0)),
    )


def plane_surface():
    return surfaces.Surface.from_strings(
        ("u", "v"), ("u", "v", "0"), ((-10.0, 10.0), (-10.0, 10.0)))


def graph_surface(height_expr, box=((-1.0, 1.0), (-1.0, 1.0))):
    """Surface z = F(u, v) over a rectangle."""
    return surfaces.Surface.from_strings(
        ("u", "v"), ("u", "v", height_expr), box)


def octant_surface():
    """Unit-sphere octant through the central projection onto the plane
    x+y+z=1; the octant is the parameter triangle (0,0),(1,0),(0,1) and
    straight parameter lines are geodesics."""
    norm = "sqrt(u^2+v^2+(1-u-v)^2)"
    return surfaces.Surface.from_strings(
        ("u", "v"),
        (f"u/{norm}", f"v/{norm}", f"(1-u-v)/{norm}"),
        ((-0.2, 1.2), (-0.2, 1.2)),
    )


def fd_frame_oracle(curve, t_mid, h=1e-4):
    """Curvature and torsion from 5-point finite differences of the
    natural parametrization; independent of the jet-based route."""
    natural = curves.natural_reparametrize(curve)
    s_mid = natural.s_of_t(t_mid)

    def stencil(f, s):
        values = [np.asarray(f(s + k * h)) for k in (-2, -1, 1, 2)]
        return (values[0] - 8 * values[1] + 8 * values[2] - values[3]) / (12 * h)

    def tangent(s):
        return natural.tangent(s)

    tau_prime = stencil(tangent, s_mid)
    k = float(np.linalg.norm(tau_prime))
    normal = tau_prime / k

    def binormal(s):
        tp = stencil(tangent, s)
        return np.cross(tangent(s), tp / np.linalg.norm(tp))

    b_prime = stencil(binormal, s_mid)
    kappa = -float(b_prime @ normal)
    return k, kappa


def fd_gradient(f, x, h=1e-3):
    """5-point finite-difference gradient of a scalar callable on R^3."""
    x = np.asarray(x, dtype=float)
    out = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        out[i] = (f(x - 2 * h * e) - 8 * f(x - h * e)
                  + 8 * f(x + h * e) - f(x + 2 * h * e)) / (12 * h)
    return out


def fd_curl(field, x, h=1e-3):
    """5-point finite-difference curl of a vector-valued callable on R^3."""

    def partial(i, j):
        e = np.zeros(3)
        e[j] = 1.0
        vals = [np.asarray(field(np.asarray(x) + k * h * e))[i]
                for k in (-2, -1, 1, 2)]
        return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)

    return np.array([partial(2, 1) - partial(1, 2),
                     partial(0, 2) - partial(2, 0),
                     partial(1, 0) - partial(0, 1)])


def random_polynomial(rng, names, degree=3, terms=4, scale=1.0):
    """Random polynomial expression string in the given variables."""
    parts = []
    for _ in range(terms):
        coeff = rng.uniform(-scale, scale)
        factors = [f"{coeff!r}"]
        for name in names:
            power = rng.integers(0, degree + 1)
            if power:
                factors.append(f"{name}^{power}" if power > 1 else name)
        parts.append("*".join(factors))
    return " + ".join(parts)


def random_poly_trig(rng, names, terms=3):
    """Random polynomial-trigonometric expression string."""
    funcs = ("sin", "cos")
    parts = [random_polynomial(rng, names, degree=2, terms=2)]
    for _ in range(terms):
        coeff = rng.uniform(-1.0, 1.0)
        func = funcs[rng.integers(0, len(funcs))]
        name = names[rng.integers(0, len(names))]
        other = names[rng.integers(0, len(names))]
        parts.append(f"{coeff!r}*{func}({name})*{other}")
    return " + ".join(parts)
