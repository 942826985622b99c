"""Spectral lab for Neumann operators on thin tubes around closed plane curves."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    CurvatureOverlap,
    GeometryError,
    NumericalError,
    SelfIntersection,
    ThinTubeError,
    ValidationError,
)

__all__ = [
    "__version__",
    "ThinTubeError",
    "ValidationError",
    "GeometryError",
    "CurvatureOverlap",
    "SelfIntersection",
    "NumericalError",
    "ConvergenceError",
]
