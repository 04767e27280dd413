"""Exception types shared by every module of the package."""


class RobinError(Exception):
    """Base class for all package errors."""


class DomainError(RobinError, ValueError):
    """An operation is undefined somewhere on its input enclosure."""


class RangeError(RobinError, ValueError):
    """An argument lies outside the range where a bound applies."""


class OutOfRange(RobinError, IndexError):
    """A query reaches past the data held by a table."""


class ResourceError(RobinError, MemoryError):
    """The request exceeds the configured memory budget."""


class PrecisionExhausted(RobinError, ArithmeticError):
    """Two enclosures could not be separated at the maximum precision."""


class StructureError(RobinError, ValueError):
    """An exponent vector violates the non-increasing structure."""
