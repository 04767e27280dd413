"""Interval-arithmetic verification of Robin's inequality for t-free integers."""

from .errors import (
    DomainError,
    OutOfRange,
    PrecisionExhausted,
    RangeError,
    ResourceError,
    RobinError,
    StructureError,
)
from .numerics import Interval, constants, euler_gamma, zeta_int

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Interval",
    "OutOfRange",
    "PrecisionExhausted",
    "RangeError",
    "ResourceError",
    "RobinError",
    "StructureError",
    "constants",
    "euler_gamma",
    "zeta_int",
]
