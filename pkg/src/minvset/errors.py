"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`MinvsetError`.
Precondition failures additionally derive from :class:`PreconditionError`; the
command line maps those to a single exit code.
"""

from __future__ import annotations


class MinvsetError(Exception):
    """Base class for library errors."""


class PreconditionError(MinvsetError, ValueError):
    """An operation was called outside its domain."""


class ParseError(MinvsetError, ValueError):
    """Malformed operator spec or other input file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
        self.line = line
        self.column = column


# poly-core
class ZeroLeading(PreconditionError):
    pass


class ZeroPolynomial(PreconditionError):
    pass


class NonConvergence(MinvsetError):
    """Root iteration failed; carries the best iterate and its residual."""

    def __init__(self, message: str, best=None, residual: float = float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


class DomainError(PreconditionError):
    pass


# operator
class ZeroOperator(PreconditionError):
    pass


class NotExactlySolvable(PreconditionError):
    pass


class ResonantSpectrum(PreconditionError):
    pass


class ConstantLeadingCoefficient(PreconditionError):
    pass


class SingularRestriction(PreconditionError):
    pass


# correspondence
class DegreeTooHigh(PreconditionError):
    pass


class DegreeViolation(PreconditionError):
    pass


class ConstantPsi(PreconditionError):
    pass


class ZeroScale(PreconditionError):
    pass


# dynamics / geometry
class EmptyCloud(PreconditionError):
    pass


class EmptyInput(PreconditionError):
    pass


# julia
class DegenerateImage(PreconditionError):
    pass


class DegreeTooLow(PreconditionError):
    pass


class NoRepellingFixedPoint(MinvsetError):
    pass
