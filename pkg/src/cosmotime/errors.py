"""Exception hierarchy shared by every module."""


class CosmotimeError(Exception):
    """Base class for library errors."""


class InvalidInputError(CosmotimeError, ValueError):
    """Malformed arguments: wrong shapes, signature mismatch, zero vectors."""


class DomainError(CosmotimeError, ValueError):
    """A point lies outside the domain an operation needs."""


class DegenerateFiberError(CosmotimeError):
    """The conformal column over a point is empty (f- == f+)."""


class UniquenessViolationError(CosmotimeError):
    """Multi-start maximization found distinct maximizers."""


class RangeError(CosmotimeError, ValueError):
    """A scalar parameter is outside its admissible interval."""


class FlowBreakdownError(CosmotimeError, ArithmeticError):
    """The Weingarten evolution hit a singular denominator."""


class InsufficientDataError(CosmotimeError):
    """No sample survived filtering."""
