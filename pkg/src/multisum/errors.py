"""Exception hierarchy shared by all modules."""


class MultisumError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MultisumError, ValueError):
    """Mismatched truncation parameters, levels, or otherwise invalid arguments."""


class DomainError(MultisumError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class TruncationError(MultisumError, ValueError):
    """A computation needs more t-order than the series carry.

    ``required`` holds the order that would have been sufficient, when known.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class DegeneracyError(MultisumError, ArithmeticError):
    """Degenerate input, e.g. a singular Pade system or an all-zero sequence."""


class NumericFailure(MultisumError, ArithmeticError):
    """A quadrature did not reach its tolerance.

    ``estimate`` is the last error estimate, ``stage`` names the pipeline stage
    (``"laplace"``, ``"borel"``, ...) when the failure is propagated.
    """

    def __init__(self, message, estimate=None, stage=None):
        super().__init__(message)
        self.estimate = estimate
        self.stage = stage


class DirectionRejected(DomainError):
    """A Pade pole sits on (or next to) the summation ray."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class AuditFailure(MultisumError, AssertionError):
    """A majorant relation was violated; ``witness`` identifies where."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ValidationError(MultisumError, ValueError):
    """A problem or config file failed to parse or validate."""
