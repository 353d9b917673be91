"""Verifying interpreter for a hybrid synchronous language with refinement types."""

from .errors import HzcError, ParseError, StratificationError, WellformednessError
from .parser import parse_program
from .printer import pretty
from .wellformed import check_wellformed

__all__ = [
    "HzcError", "ParseError", "StratificationError", "WellformednessError",
    "parse_program", "pretty", "check_wellformed",
]

__version__ = "0.1.0"
