"""Quadrature and ODE helpers used throughout the package."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError

__all__ = [
    "gauss_legendre_nodes",
    "integrate_gl",
    "integrate_adaptive",
    "integrate_rectangle",
    "integrate_triangle",
    "rk4_trace",
]


@lru_cache(maxsize=None)
def gauss_legendre_nodes(n: int):
    """Nodes and weights on [-1, 1], cached per order."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def integrate_gl(f: Callable[[float], float], a: float, b: float,
                 nodes: int = 64) -> float:
    """Fixed-order Gauss-Legendre quadrature of f on [a, b]."""
    x, w = gauss_legendre_nodes(nodes)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * sum(wi * f(mid + half * xi) for xi, wi in zip(x, w))


def integrate_adaptive(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-10, nodes: int = 15,
                       max_depth: int = 40) -> float:
    """Adaptive bisection Gauss-Legendre quadrature with absolute tolerance.

    The error on each interval is estimated by comparing one panel against
    the sum over its two halves; raises QuadratureError (with the achieved
    error) when the recursion depth limit is hit.
    """
    if a == b:
        return 0.0

    def recurse(lo, hi, whole, budget, depth):
        mid = 0.5 * (lo + hi)
        left = integrate_gl(f, lo, mid, nodes)
        right = integrate_gl(f, mid, hi, nodes)
        err = abs(left + right - whole)
        if err <= budget or err == 0.0:
            return left + right
        if depth >= max_depth:
            raise QuadratureError("quadrature failed to converge", err)
        return (recurse(lo, mid, left, budget / 2.0, depth + 1)
                + recurse(mid, hi, right, budget / 2.0, depth + 1))

    return recurse(a, b, integrate_gl(f, a, b, nodes), tol, 0)


def integrate_rectangle(f: Callable[[float, float], float],
                        u_range: Sequence[float], v_range: Sequence[float],
                        nodes: int = 64) -> float:
    """Tensor-product Gauss-Legendre integral over an axis-aligned rectangle."""
    x, w = gauss_legendre_nodes(nodes)
    ua, ub = u_range
    va, vb = v_range
    um, uh = 0.5 * (ua + ub), 0.5 * (ub - ua)
    vm, vh = 0.5 * (va + vb), 0.5 * (vb - va)
    total = 0.0
    for xi, wi in zip(x, w):
        u = um + uh * xi
        row = 0.0
        for xj, wj in zip(x, w):
            row += wj * f(u, vm + vh * xj)
        total += wi * row
    return total * uh * vh


def integrate_triangle(f: Callable[[float, float], float],
                       vertices: Sequence[Sequence[float]],
                       nodes: int = 64) -> float:
    """Gauss-Legendre integral over a triangle via the collapsed-square map."""
    (x0, y0), (x1, y1), (x2, y2) = [tuple(map(float, v)) for v in vertices]
    jac = abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
    x, w = gauss_legendre_nodes(nodes)
    # map [-1,1]^2 -> unit square -> reference triangle (s(1-t), s t)
    total = 0.0
    for xi, wi in zip(x, w):
        s = 0.5 * (xi + 1.0)
        for xj, wj in zip(x, w):
            t = 0.5 * (xj + 1.0)
            r1 = s * (1.0 - t)
            r2 = s * t
            u = x0 + (x1 - x0) * r1 + (x2 - x0) * r2
            v = y0 + (y1 - y0) * r1 + (y2 - y0) * r2
            total += wi * wj * s * f(u, v)
    return total * jac * 0.25


def rk4_trace(rhs: Callable[[float, np.ndarray], np.ndarray],
              y0: Sequence[float], t0: float, t1: float,
              steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4; returns (ts, ys) including both endpoints."""
    if steps < 1:
        raise ValueError("steps must be positive")
    y = np.asarray(y0, dtype=float).copy()
    h = (t1 - t0) / steps
    ts = np.empty(steps + 1)
    ys = np.empty((steps + 1, y.size))
    ts[0] = t0
    ys[0] = y
    t = t0
    for k in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(
                f"integration produced a non-finite state at step {k + 1}")
        t = t0 + (k + 1) * h
        ts[k + 1] = t
        ys[k + 1] = y
    return ts, ys
