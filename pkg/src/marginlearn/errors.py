"""Exception types shared across the library."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class DegenerateRotationError(ValueError):
    """Rotation plane is undefined because the target is parallel to the source."""


class DegeneratePointError(ValueError):
    """The zero vector lies on every halfspace boundary and has no stable label."""


class RankDeficientError(ValueError):
    """A second-moment matrix is singular or too ill-conditioned to invert."""


class InfeasibleError(RuntimeError):
    """No homogeneous separator is strictly consistent with the examples."""


class DegenerateDataError(ValueError):
    """Training data carries no directional information (all points zero)."""


class CalibrationError(RuntimeError):
    """An empirically tabulated map could not be inverted over the requested range."""


class InsufficientResolutionError(RuntimeError):
    """Monte Carlo resolution is too low to fit the requested quantity."""


class BudgetExhaustedError(RuntimeError):
    """The unlabeled draw budget was exceeded mid-run.

    The ``partial`` attribute carries the result accumulated before the
    budget ran out (or ``None`` when nothing was learned yet).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
