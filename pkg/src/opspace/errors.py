"""Exception types shared across the package."""


class OpspaceError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(OpspaceError, ValueError):
    """An argument violates a documented precondition (non-finite entries, norm bounds, ...)."""


class ShapeError(OpspaceError, ValueError):
    """Matrix or block-grid dimensions are incompatible."""


class SpaceFormatError(OpspaceError, ValueError):
    """A space-definition document failed to parse or validate."""


class UnsupportedLevelError(OpspaceError, ValueError):
    """An amplification level was requested that the space's norm mode cannot evaluate."""


class NumericalError(OpspaceError, ArithmeticError):
    """A numerically required construction failed (e.g. a square root of a non-PSD operand)."""
