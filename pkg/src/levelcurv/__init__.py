"""Support-function laboratory for level-set curvature of minimal graphs over convex rings."""

from .errors import (ConvexityLoss, DivergentIntegral, LevelCurvError, NoConvergence,
                     NoCriticalPoint, NoGraphSolution, NonConvexSlice, OrientationError,
                     OrientationLoss, PreconditionError, UnsupportedDimension)

__all__ = [
    "ConvexityLoss", "DivergentIntegral", "LevelCurvError", "NoConvergence",
    "NoCriticalPoint", "NoGraphSolution", "NonConvexSlice", "OrientationError",
    "OrientationLoss", "PreconditionError", "UnsupportedDimension",
]
