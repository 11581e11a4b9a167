"""Exception types raised across the package."""


class FbrectError(Exception):
    """Base class for every error raised by fbrect."""


class ZeroDenominator(FbrectError, ZeroDivisionError):
    pass


class PoleError(FbrectError, ZeroDivisionError):
    pass


class IndeterminateError(FbrectError, ZeroDivisionError):
    pass


class SingularMatrix(FbrectError):
    pass


class Cancelled(FbrectError):
    """Raised when a cooperative cancellation token is set mid-computation."""


class SingularNhat(FbrectError):
    pass


class DegenerateSubstitution(FbrectError):
    pass


class ExcludedPoint(FbrectError):
    pass


class ConjugateViolation(FbrectError):
    pass


class NotRectifiable(FbrectError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SearchExhausted(FbrectError):
    pass


class UncontrollableModeExcluded(FbrectError):
    pass


class ZeroVector(FbrectError):
    pass


class NotInImage(FbrectError):
    pass


class SingularV(FbrectError):
    pass


class NonRealResult(FbrectError):
    pass


class UnstableSpectrum(FbrectError):
    pass


class InputError(FbrectError, ValueError):
    """Malformed input file or argument; carries the offending field path."""

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
