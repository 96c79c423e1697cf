"""Numerical differential geometry of curves, coordinate systems, and
surfaces in Euclidean 3-space, driven by a small expression language with
exact forward-mode derivatives."""

from . import charts, curves, errors, expr, surface_curves, surfaces, tensor

__all__ = ["charts", "curves", "errors", "expr", "surface_curves",
           "surfaces", "tensor"]

__version__ = "0.1.0"
