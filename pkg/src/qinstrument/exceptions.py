"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class SingularMatrixError(ArithmeticError):
    """A matrix that must be invertible is numerically singular."""


class DegenerateTrajectoryError(ArithmeticError):
    """A piled-up Kraus operator lost invertibility along its path."""


class PositivityViolationError(ArithmeticError):
    """A density matrix acquired a significantly negative eigenvalue."""


class ExtractionError(ArithmeticError):
    """Cartan coordinates could not be recovered within tolerance."""


class RepresentationTooSmallError(ArithmeticError):
    """A truncated representation is populated up to its corner."""


class ResolutionError(ValueError):
    """A discretization grid is too coarse for the requested accuracy."""


class NumericalRankError(ArithmeticError):
    """Independence test is ill-conditioned."""


class DegreeOverflowError(OverflowError):
    """A normal-ordered monomial exceeded the configured degree."""


class WrongMeasureError(ValueError):
    """A statistic was requested under a sampling measure that does not support it."""
