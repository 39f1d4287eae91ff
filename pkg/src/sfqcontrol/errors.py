"""Exception types raised across the package."""


class SFQError(Exception):
    """Base class for all package errors."""


class NonHermitianInput(SFQError, ValueError):
    pass


class DimensionMismatch(SFQError, ValueError):
    pass


class InvalidParams(SFQError, ValueError):
    """A ModelParams invariant is violated."""


class OutOfWindow(SFQError, ValueError):
    pass


class PeriodTooShort(SFQError, ValueError):
    pass


class EmptySequence(SFQError, ValueError):
    pass


class InvalidConfig(SFQError, ValueError):
    """A GAConfig or run configuration invariant is violated."""


class LengthMismatch(SFQError, ValueError):
    pass


class NonIntegerPixelCount(SFQError, ValueError):
    pass


class SequenceFormatError(SFQError, ValueError):
    pass


class DatabaseFormatError(SFQError, ValueError):
    pass
