"""Exception types shared across the package."""


class BregaccelError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(BregaccelError):
    """Two pieces of problem data do not have compatible shapes."""

    def __init__(self, left_name, left_shape, right_name, right_shape):
        self.left_name = left_name
        self.right_name = right_name
        super().__init__(
            f"dimension mismatch: {left_name} has shape {left_shape}, "
            f"{right_name} has shape {right_shape}"
        )


class NotPositiveDefiniteError(BregaccelError):
    """A matrix that must be symmetric positive definite is not."""


class NumericalError(BregaccelError):
    """A non-finite value or a numerical breakdown occurred inside a solver."""


class LineSearchError(BregaccelError):
    """Projected backtracking exhausted its trial budget without sufficient decrease."""


class EmptyFaceError(BregaccelError):
    """Subspace step requested at a point with no nonzero coordinates."""


class InfeasibleProblemError(BregaccelError):
    """No sign pattern yields a feasible stationary point (constraints inconsistent)."""


class SizeLimitError(BregaccelError):
    """Problem exceeds the hard size cap of the enumeration solver."""


class InputError(BregaccelError):
    """Malformed user input (CLI paths, CSV contents, config files)."""
