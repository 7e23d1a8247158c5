"""Exception hierarchy.

Every error signals that a hypothesis of the concavity theorem (strict
convexity, non-vanishing gradient, graph solvability) failed or that the
caller asked for something outside the supported domain.
"""


class LevelCurvError(Exception):
    """Base class for all package errors."""


class UnsupportedDimension(LevelCurvError, ValueError):
    pass


class NonConvexSlice(LevelCurvError):
    """A support function whose b_ij = h delta_ij + h_ij is not positive definite."""

    def __init__(self, message, node=None, margin=None):
        super().__init__(message)
        self.node = node
        self.margin = margin


class OrientationError(LevelCurvError):
    """h_t >= 0 somewhere: gradient vanishes or the level sets are mis-oriented."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NoGraphSolution(LevelCurvError):
    """The prescribed height drop exceeds what any graph over the ring attains."""

    def __init__(self, message, max_drop=None):
        super().__init__(message)
        self.max_drop = max_drop


class ConvexityLoss(LevelCurvError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class OrientationLoss(LevelCurvError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NoConvergence(LevelCurvError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoCriticalPoint(LevelCurvError):
    pass


class PreconditionError(LevelCurvError, ValueError):
    pass


class DivergentIntegral(LevelCurvError, ValueError):
    pass
