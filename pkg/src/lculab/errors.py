"""Exception and warning types shared across the package."""


class LculabError(Exception):
    """Base class for all package errors."""


class ValidationError(LculabError):
    """An input violates a structural invariant (shape, stochasticity, hermiticity, ...)."""


class SingularityError(LculabError):
    """A scalar function is undefined on part of an operator's spectrum."""


class AnnihilationError(LculabError):
    """A linear combination of unitaries maps the input state to (numerically) zero."""


class CalibrationError(LculabError):
    """A grid calibration loop failed to converge within its iteration budget."""


class WalkTimeoutError(LculabError):
    """A Monte-Carlo walk exceeded the global step cap."""


class PreconditionWarning(UserWarning):
    """A stated validity precondition does not hold; results are reported, not masked."""
