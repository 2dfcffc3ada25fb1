"""Exception hierarchy for the scvcm package."""


class SCVCError(Exception):
    """Base class for all errors raised by scvcm."""


class ValidationError(SCVCError, ValueError):
    """Malformed input (bad shapes, out-of-range parameters)."""


class DuplicateLocation(ValidationError):
    pass


class TooFewPoints(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class TooManyKnots(ValidationError):
    pass


class DegenerateColumn(ValidationError):
    pass


class InvalidGamma(ValidationError):
    pass


class NonPositiveTheta(ValidationError):
    pass


class KinkPoint(ValidationError):
    """Derivative requested exactly at a branch boundary of the penalty."""


class SingularSystem(SCVCError, ArithmeticError):
    pass


class SingularTrace(SingularSystem):
    pass


class SingularLocalFit(SingularSystem):
    def __init__(self, location, message=None):
        self.location = location
        super().__init__(message or f"weighted design is singular at location {location}")


class FactorizationFailure(SCVCError, ArithmeticError):
    pass


class NonFiniteObjective(SCVCError, ArithmeticError):
    pass


class RejectionOverflow(SCVCError, RuntimeError):
    pass


class AllFitsFailed(SCVCError, RuntimeError):
    pass


class NotConverged(SCVCError, RuntimeError):
    """ADMM hit its iteration cap; ``result`` still holds the partial fit."""

    def __init__(self, result, message=None):
        self.result = result
        super().__init__(
            message
            or f"ADMM did not converge in {result.iterations} iterations "
            f"(primal={result.primal_history[-1]:.3g}, dual={result.dual_history[-1]:.3g})"
        )
