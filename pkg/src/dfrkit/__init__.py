"""Decryption-failure analysis for NewHope-style Ring-LWE encryption."""

from .params import (
    NEWHOPE512,
    NEWHOPE1024,
    TOY,
    IntegrityError,
    NumericalError,
    ParameterError,
    SchemeParams,
)

__version__ = "0.1.0"

__all__ = [
    "NEWHOPE512",
    "NEWHOPE1024",
    "TOY",
    "IntegrityError",
    "NumericalError",
    "ParameterError",
    "SchemeParams",
]
