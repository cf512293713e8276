"""Exception types shared across the package."""


class BallSpectraError(Exception):
    """Base class for every error raised by the package."""


class OrderRangeError(BallSpectraError, ValueError):
    """Requested Bessel order is outside the supported range."""


class IndexRangeError(BallSpectraError, ValueError):
    """A multi-index or zero index is inadmissible or beyond table capacity."""


class PoleEvaluationError(BallSpectraError, ValueError):
    """An angular operator was evaluated exactly at a pole."""


class OperatorKindError(BallSpectraError, TypeError):
    """A record of the wrong operator kind was passed."""


class ResolutionError(BallSpectraError, RuntimeError):
    """Quadrature does not resolve the integrand (unstable under refinement)."""


class StencilError(BallSpectraError, ValueError):
    """A finite-difference stencil would leave the ball."""


class DomainError(BallSpectraError, ValueError):
    """Coefficients do not lie in the subspace an operator acts on."""


class SpectrumCollisionError(BallSpectraError, ValueError):
    """Resolvent requested at (or numerically at) an eigenvalue."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
