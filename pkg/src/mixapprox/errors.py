"""Exception hierarchy shared by every module.

CLI exit codes key off these classes: validation problems map to 2,
numerical failures to 3 and sandwich violations to 4.
"""


class MixApproxError(Exception):
    """Base class for all package errors."""


class ValidationError(MixApproxError, ValueError):
    """Bad input or configuration (CLI exit code 2)."""


class OutOfRegimeError(ValidationError):
    """A closed-form bound was requested outside the regime where it holds.

    The message names the inequality that failed.
    """


class DegenerateInputError(ValidationError):
    """Input that makes the operation meaningless, e.g. a zero-mass interval."""


class UnsupportedLawError(ValidationError):
    """The operation is not defined for this kind of mixing law."""


class NumericalError(MixApproxError, ArithmeticError):
    """A computation produced non-finite values or lost accuracy (exit code 3)."""


class PrecisionError(NumericalError):
    """Double precision is exhausted; retry with ``precision="extended"``."""


class RangeError(NumericalError, OverflowError):
    """A result exceeds the representable floating-point range."""


class SandwichViolation(MixApproxError):
    """A certified lower bound exceeded a measured error (exit code 4).

    This always signals a bug, never a finding.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
