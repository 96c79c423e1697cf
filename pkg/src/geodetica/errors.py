"""Exception types shared across the package."""


class GeodeticaError(Exception):
    """Base class for all package errors."""


class SingularPoint(GeodeticaError):
    """A point where the defining map degenerates (zero tangent, rank drop)."""


class DegenerateCurvature(GeodeticaError):
    """Curvature too small for the moving frame to be defined.

    Carries the unit tangent that is still available at the point.
    """

    def __init__(self, message, tangent=None):
        super().__init__(message)
        self.tangent = tangent


class NonPlanarCurve(GeodeticaError):
    """Raised by constructions that require the curve to lie in a plane."""


class OutOfDomain(GeodeticaError):
    """Evaluation requested outside the declared validity box."""


class ZeroSpeed(GeodeticaError):
    """Curve has (numerically) vanishing velocity at the requested parameter."""


class QuadratureError(GeodeticaError):
    """Adaptive quadrature failed to reach the requested tolerance.

    The achieved error estimate is stored in ``achieved``.
    """

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error {achieved:.3e})")
        self.achieved = achieved


class NotPotential(GeodeticaError):
    """Vector field has a nonzero rotor; no scalar potential exists."""


class NotVorticular(GeodeticaError):
    """Vector field has a nonzero divergence; no vector potential exists."""


class NotClosed(GeodeticaError):
    """A closed contour was required but endpoints do not match."""


class TensorShapeError(GeodeticaError):
    """Operands have incompatible dimension, type, or weight."""
