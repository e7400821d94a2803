"""Exception hierarchy.

Validation problems derive from :class:`ValueError`, numerical failures from
:class:`RuntimeError`; the CLI maps the two families to exit codes 2 and 3.
"""


class SpinPhotonError(Exception):
    """Base class for all package errors."""


class ValidationError(SpinPhotonError, ValueError):
    """Bad input: wrong shape, out of range, missing or unknown field."""


class NonHermitianError(ValidationError):
    def __init__(self, max_asymmetry: float):
        self.max_asymmetry = max_asymmetry
        super().__init__(f"matrix is not Hermitian (max |M - M^H| = {max_asymmetry:.3e})")


class InconsistentInputError(ValidationError):
    """Measured inputs that admit no parameter solution."""


class NumericalError(SpinPhotonError, RuntimeError):
    """A numerical procedure failed to deliver a trustworthy result."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class SingularFitError(NumericalError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"singular normal equations (condition estimate {condition:.3e})")


class QuadratureError(NumericalError):
    def __init__(self, estimates):
        self.estimates = tuple(estimates)
        super().__init__(
            "quadrature did not converge; last two estimates "
            f"{self.estimates[0]!r}, {self.estimates[1]!r}"
        )


class ConservationError(NumericalError):
    """Population bookkeeping drifted beyond tolerance."""


class LevelClassificationError(NumericalError):
    """Eigenvalue clusters could not be matched to symmetry labels."""


class ConsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree."""
