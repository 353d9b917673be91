"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class HzcError(Exception):
    """Base class for every structured error raised by the toolchain."""


class ParseError(HzcError):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        super().__init__(f"{line}:{col}: {message}")


class StratificationError(HzcError):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(message)


class WellformednessError(HzcError):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        self.violations = [self]
        super().__init__(f"{path}: {message}" if path else message)


class ArityError(WellformednessError):
    pass


class UnboundVariable(WellformednessError):
    def __init__(self, name: str, path: str = ""):
        self.name = name
        super().__init__(f"unbound variable {name!r}", path)


class Unsupported(WellformednessError):
    pass


class DuplicateGlobal(WellformednessError):
    pass


class LastOutsideReset(WellformednessError):
    pass


class UnguardedRecursion(WellformednessError):
    pass


class DivisionByZero(HzcError):
    pass


class UnsupportedPredicateShape(HzcError):
    pass


class ResolutionExhausted(HzcError):
    def __init__(self, message: str, window=None):
        self.window = window
        super().__init__(message)


class UndecidableAtResolution(HzcError):
    pass


class NonFiniteState(HzcError):
    def __init__(self, message: str, time: float | None = None):
        self.time = time
        super().__init__(message)


class OracleUnsupported(HzcError):
    """Dynamics outside the shape the closed-form oracle handles."""


class ResetArityMismatch(HzcError):
    pass


class SolverUnavailable(HzcError):
    pass


class SolverProtocolError(HzcError):
    pass
