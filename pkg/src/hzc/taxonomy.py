"""Case analysis of zero sets for closed-form functions.

A zero interval ``[a, b]`` of a continuous ``f`` is classified by what
``f`` does just left of ``a`` (rows A-G) and just right of ``b``
(columns 1-7).  Rows F/G and columns 6/7 describe a zero interval that
touches the edge of the domain (finite or infinite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UndecidableAtResolution

ROWS = "ABCDEFG"
COLS = "1234567"
PASSING = "Passing"
STAYING = "Staying"

_ROW_OF = {
    frozenset("-"): "A", frozenset("+"): "B", frozenset("+-"): "C", frozenset("+-0"): "C",
    frozenset("-0"): "D", frozenset("+0"): "E",
}
_COL_OF = {
    frozenset("+"): "1", frozenset("-"): "2", frozenset("+-"): "3", frozenset("+-0"): "3",
    frozenset("+0"): "4", frozenset("-0"): "5",
}


@dataclass(frozen=True)
class TaxonomyCase:
    left: str
    right: str
    subcase: str

    @property
    def label(self) -> str:
        return f"{self.left}{self.right}"

    def __str__(self) -> str:
        return f"{self.label}/{self.subcase}"


def subcases(left: str, right: str) -> tuple:
    if left == "G" or right == "7":
        return (STAYING,)
    return (PASSING, STAYING)


ALL_CASES = tuple(
    TaxonomyCase(r, c, s) for r in ROWS for c in COLS for s in subcases(r, c)
)

STRICT_CROSSINGS = frozenset({"A1", "A4", "D1", "D4"})
LOOSE_CROSSINGS = frozenset({"A1", "A3", "A4", "C1", "C3", "C4", "D1", "D3", "D4"})


def is_crossing_under(case: TaxonomyCase, definition: str) -> bool:
    if case not in _CASE_SET:
        raise ValueError(f"not an admissible case: {case}")
    table = STRICT_CROSSINGS if definition == "strict" else LOOSE_CROSSINGS
    return case.label in table


_CASE_SET = frozenset(ALL_CASES)


# --------------------------------------------------------------------------
# probing


def _signs(values) -> frozenset:
    v = np.asarray(values, dtype=float)
    out = set()
    if np.any(v > 0):
        out.add("+")
    if np.any(v < 0):
        out.add("-")
    if np.any(v == 0):
        out.add("0")
    return frozenset(out)


_Q = np.logspace(-7, 0, 600)


def sampling_probe(f: Callable, point: float, side: int) -> Callable:
    """Sign set of ``f`` on a one-sided ball, estimated from log-spaced samples."""

    def probe(r: float) -> frozenset:
        xs = point + side * r * _Q
        return _signs([f(float(x)) for x in xs])

    return probe


def _stable(probe: Callable, r0: float, levels: int, window: int) -> frozenset:
    sets = [frozenset(probe(r0 * 2.0 ** -k)) for k in range(levels)]
    tail = sets[-window:]
    if any(s != tail[0] for s in tail):
        raise UndecidableAtResolution(f"sign pattern did not stabilize: {[''.join(sorted(s)) for s in tail]}")
    return tail[0]


def classify_case(f: Callable, a: float, b: float, left_probe=None, right_probe=None,
                  lo: float = -math.inf, hi: float = math.inf,
                  r0: float = 0.5, levels: int = 16, window: int = 8) -> TaxonomyCase:
    """Classify the zero interval ``[a, b]`` of ``f`` on the domain ``[lo, hi]``."""
    if a > b:
        raise ValueError("need a <= b")
    if a == lo:
        row = "G" if math.isinf(a) else "F"
    else:
        signs = _stable(left_probe or sampling_probe(f, a, -1), r0, levels, window)
        row = _ROW_OF.get(signs)
        if row is None:
            raise UndecidableAtResolution(f"left sign set {set(signs)} does not end a zero interval at a")
    if b == hi:
        col = "7" if math.isinf(b) else "6"
    else:
        signs = _stable(right_probe or sampling_probe(f, b, +1), r0, levels, window)
        col = _COL_OF.get(signs)
        if col is None:
            raise UndecidableAtResolution(f"right sign set {set(signs)} does not end a zero interval at b")
    sub = PASSING if a == b else STAYING
    case = TaxonomyCase(row, col, sub)
    if case not in _CASE_SET:
        raise ValueError(f"inadmissible case {case}")
    return case


# --------------------------------------------------------------------------
# built-in example functions, one shape per row and column


def _osc_sq(s: float) -> float:
    return (s * math.sin(1.0 / s)) ** 2


def _osc_cube(s: float) -> float:
    return s ** 3 * math.sin(1.0 / s)


# behaviour as a function of the distance s > 0 from the zero interval
_SIDE_SHAPES = {
    "A": lambda s: -s, "B": lambda s: s * s, "C": _osc_cube,
    "D": lambda s: -_osc_sq(s), "E": _osc_sq,
    "1": lambda s: s, "2": lambda s: -s, "3": _osc_cube,
    "4": _osc_sq, "5": lambda s: -_osc_sq(s),
}
# shapes whose zeros accumulate at the interval; sampling alone cannot see them
_ACCUMULATING_ZEROS = {"D", "E", "4", "5"}


def _analytic_probe(key: str, point: float, side: int) -> Callable:
    shape = _SIDE_SHAPES[key]
    base = sampling_probe(lambda x: shape(abs(x - point)), point, side)

    def probe(r: float) -> frozenset:
        signs = set(base(r))
        # zeros of s * sin(1/s) at s = 1/(k pi) lie in every ball around 0
        if key in _ACCUMULATING_ZEROS and 1.0 / (math.ceil(1.0 / (math.pi * r)) * math.pi) <= r:
            signs.add("0")
        return frozenset(signs)

    return probe


@dataclass(frozen=True)
class Example:
    case: TaxonomyCase
    f: Callable
    a: float
    b: float
    lo: float
    hi: float
    left_probe: Callable | None
    right_probe: Callable | None


def example_for(case: TaxonomyCase) -> Example:
    """A concrete function realizing ``case``."""
    row, col = case.left, case.right
    a = -math.inf if row == "G" else 0.0
    if col == "7":
        b = math.inf
    elif case.subcase == PASSING:
        b = a
    else:
        b = 1.0
    lo = a if row in "FG" else -math.inf
    hi = b if col in "67" else math.inf
    left = _SIDE_SHAPES.get(row)
    right = _SIDE_SHAPES.get(col)

    def f(x: float) -> float:
        if x < a:
            return left(a - x) if left else 0.0
        if x > b:
            return right(x - b) if right else 0.0
        return 0.0

    lp = _analytic_probe(row, a, -1) if row in _SIDE_SHAPES else None
    rp = _analytic_probe(col, b, +1) if col in _SIDE_SHAPES else None
    return Example(case, f, a, b, lo, hi, lp, rp)


@dataclass(frozen=True)
class HarnessRow:
    case: TaxonomyCase
    classified: TaxonomyCase
    loose: bool
    strict: bool

    @property
    def matches(self) -> bool:
        return self.case == self.classified


def run_harness() -> list:
    """Classify the built-in example of every case and record both verdicts."""
    out = []
    for case in ALL_CASES:
        ex = example_for(case)
        got = classify_case(ex.f, ex.a, ex.b, ex.left_probe, ex.right_probe, ex.lo, ex.hi)
        out.append(HarnessRow(case, got, is_crossing_under(got, "loose"), is_crossing_under(got, "strict")))
    return out


def render_grid(rows: list, definition: str) -> str:
    """7x7 grid; ``P``/``S`` mark crossing passing/staying cases, ``.`` non-crossing, blank n/a."""
    cell = {}
    for r in rows:
        v = r.strict if definition == "strict" else r.loose
        key = (r.case.left, r.case.right)
        mark = (r.case.subcase[0] if v else ".")
        cell[key] = cell.get(key, "") + mark
    lines = [f"{definition} definition", "    " + " ".join(f"{c:>3}" for c in COLS)]
    for row in ROWS:
        lines.append(f"  {row} " + " ".join(f"{cell.get((row, c), ''):>3}" for c in COLS))
    return "\n".join(lines)
