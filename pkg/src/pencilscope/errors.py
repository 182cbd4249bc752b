"""Exception hierarchy with stable error codes.

Every exception raised by the package derives from :class:`PencilscopeError`
and carries a ``code`` string that the command-line front end prints verbatim.
"""

from __future__ import annotations


class PencilscopeError(Exception):
    """Base class for all package errors."""

    code = "Error"
    # Errors that describe an ambiguous numerical outcome rather than bad input.
    ambiguous = False

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class NotHermitianError(PencilscopeError):
    code = "NotHermitian"


class NoConvergenceError(PencilscopeError):
    code = "NoConvergence"


class SingularJError(PencilscopeError):
    code = "SingularJ"


class DimensionMismatchError(PencilscopeError):
    code = "DimensionMismatch"


class SingularLeadingCoefficientError(PencilscopeError):
    code = "SingularLeadingCoefficient"


class NotSelfadjointError(PencilscopeError):
    code = "NotSelfadjoint"


class MatchingAmbiguousError(PencilscopeError):
    code = "MatchingAmbiguous"
    ambiguous = True


class OrderUndeterminedError(PencilscopeError):
    code = "OrderUndetermined"
    ambiguous = True


class FlagDegenerateError(PencilscopeError):
    code = "FlagDegenerate"
    ambiguous = True


class DegenerateGramError(PencilscopeError):
    code = "DegenerateGram"
    ambiguous = True


class NotPositiveDefiniteError(PencilscopeError):
    code = "NotPositiveDefinite"


class NotSimpleError(PencilscopeError):
    code = "NotSimple"


class DerivativeBelowNoiseError(PencilscopeError):
    code = "DerivativeBelowNoise"
    ambiguous = True


class NotGeometricMultOneError(PencilscopeError):
    code = "NotGeometricMultOne"


class NotSemisimpleError(PencilscopeError):
    code = "NotSemisimple"


class ComplexRootsDetectedError(PencilscopeError):
    code = "ComplexRootsDetected"
    ambiguous = True


class RootOnContourError(PencilscopeError):
    code = "RootOnContour"
    ambiguous = True


class PhaseStepTooLargeError(PencilscopeError):
    code = "PhaseStepTooLarge"
    ambiguous = True


class InconsistentError(PencilscopeError):
    code = "Inconsistent"
    ambiguous = True


class NotRealError(PencilscopeError):
    code = "NotReal"


class KernelsNotOrthogonalError(PencilscopeError):
    code = "KernelsNotOrthogonal"


class ParseError(PencilscopeError):
    code = "ParseError"


class SchemaError(PencilscopeError):
    code = "SchemaError"


class InvariantViolationError(PencilscopeError):
    code = "InvariantViolation"
