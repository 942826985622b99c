"""Exception hierarchy shared by all modules."""


class ThinTubeError(Exception):
    """Base class for all package errors."""


class ValidationError(ThinTubeError, ValueError):
    """Input or configuration failed a semantic check."""


class GeometryError(ValidationError):
    """The curve or tube is not admissible."""


class CurvatureOverlap(GeometryError):
    """The half-width is not below the curvature radius."""


class SelfIntersection(GeometryError):
    """The curve or its tube is not injective."""


class NumericalError(ThinTubeError):
    """A factorization, iteration or extrapolation failed."""


class ConvergenceError(NumericalError):
    """An iterative method did not reach its tolerance.

    The best available estimate is kept on ``best`` when there is one.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
