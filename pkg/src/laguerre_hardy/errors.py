"""Exception hierarchy shared by all modules."""


class LaguerreHardyError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LaguerreHardyError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class PrecisionError(LaguerreHardyError, ArithmeticError):
    """A quadrature rule or refinement cannot reach the requested accuracy."""


class EvaluationError(LaguerreHardyError, ArithmeticError):
    """An integrand returned a non-finite value.

    The offending node is kept on ``node``.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class StructuralError(LaguerreHardyError, ValueError):
    """A function's support is inconsistent with its declared ball."""


class CalibrationError(LaguerreHardyError, RuntimeError):
    """No admissible constant was found during calibration."""
