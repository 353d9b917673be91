"""Sampled up-crossing detection and first-crossing selection.

A crossing is found at sampling resolution: the detector arms once it sees
a sample below ``-tol_v`` and fires at the first later sample above
``tol_v``.  The bracketing step is then refined until it is narrower than
``tol_t``.  Runs of at least two near-zero samples before the firing
sample are reported as a staying interval ``[a, b]`` with the crossing at
``b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ResolutionExhausted

LOOSE = "loose"
STRICT = "strict"

_SUBDIV = 8
_OSCILLATION_LEVELS = 3


class GuardSignal:
    """A scalar function of time on an interval."""

    def __call__(self, t):
        raise NotImplementedError

    def native_times(self, t0: float, t1: float):
        return None


class ClosedForm(GuardSignal):
    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, t):
        if np.ndim(t):
            return np.array([float(self.fn(float(x))) for x in np.asarray(t)])
        return float(self.fn(float(t)))


class Sampled(GuardSignal):
    """Piecewise-linear interpolant of a sample table."""

    def __init__(self, times: Sequence[float], values: Sequence[float]):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def native_times(self, t0, t1):
        inside = self.times[(self.times >= t0) & (self.times <= t1)]
        return np.unique(np.concatenate(([t0], inside, [t1])))


def as_signal(g) -> GuardSignal:
    return g if isinstance(g, GuardSignal) else ClosedForm(g)


@dataclass(frozen=True)
class CrossingVerdict:
    crossing: bool
    time: float | None = None
    a: float | None = None
    definition: str = LOOSE
    neg_witness: float | None = None
    pos_witness: float | None = None
    bisections: int = 0

    @property
    def staying(self) -> bool:
        return self.crossing and self.a is not None and self.a < self.time

    @property
    def interval(self):
        return (self.a, self.time) if self.crossing else None


NO_CROSSING = CrossingVerdict(False)


def _refine_up(g, lo, hi, tol_t, tol_v, max_bisections):
    """Shrink [lo, hi] with g(lo) <= tol_v < g(hi) towards the earliest up-crossing."""
    steps = 0
    oscillating = 0
    while hi - lo > tol_t and steps < max_bisections:
        ts = np.linspace(lo, hi, _SUBDIV + 1)
        vs = np.asarray(g(ts[1:-1]), dtype=float)
        vals = np.concatenate(([-np.inf if g(lo) < -tol_v else 0.0], vs, [1.0]))
        pos = vals > tol_v
        first = int(np.argmax(pos))
        ups = int(np.count_nonzero(pos[1:] & ~pos[:-1]))
        oscillating = oscillating + 1 if ups > 1 and np.any(vals[first:] < -tol_v) else 0
        if oscillating >= _OSCILLATION_LEVELS:
            raise ResolutionExhausted(
                f"guard sign oscillates below resolution near t={lo:.12g}", (lo, hi))
        new_lo, new_hi = ts[first - 1], ts[first]
        steps += 1
        if not (new_hi - new_lo < hi - lo):
            break
        lo, hi = new_lo, new_hi
    return lo, hi, steps


def _refine_left_edge(g, lo, hi, tol_t, tol_v, max_bisections):
    """Boundary between g(lo) < -tol_v and |g(hi)| <= tol_v."""
    steps = 0
    while hi - lo > tol_t and steps < max_bisections:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < -tol_v:
            lo = mid
        else:
            hi = mid
        steps += 1
    return hi, steps


def _sample_grid(g: GuardSignal, window, dt):
    t0, t1 = float(window[0]), float(window[1])
    native = g.native_times(t0, t1)
    if native is not None and dt is None:
        return native
    if dt is None:
        dt = (t1 - t0) / 1000.0
    n = max(1, int(np.ceil((t1 - t0) / dt - 1e-12)))
    ts = t0 + dt * np.arange(n + 1)
    ts[-1] = min(ts[-1], t1)
    return ts


def detect_upcrossing(g, window, tol_t: float = 1e-9, tol_v: float = 0.0, dt: float | None = None,
                      max_bisections: int = 200, definition: str = LOOSE) -> CrossingVerdict:
    """Earliest up-crossing of ``g`` inside ``window`` at sampling resolution."""
    g = as_signal(g)
    ts = _sample_grid(g, window, dt)
    vs = np.asarray(g(ts), dtype=float)
    armed = False
    last_neg = None
    zero_run_start = None
    for k in range(len(ts)):
        v = vs[k]
        if armed and v > tol_v:
            lo, hi, steps = _refine_up(g, ts[k - 1], ts[k], tol_t, tol_v, max_bisections)
            a = lo
            if zero_run_start is not None and k - zero_run_start >= 2:
                a, extra = _refine_left_edge(g, ts[zero_run_start - 1], ts[zero_run_start],
                                             tol_t, tol_v, max_bisections)
                steps += extra
            verdict = CrossingVerdict(True, float(lo), float(min(a, lo)), LOOSE,
                                      float(last_neg), float(hi), steps)
            if definition == STRICT and not _strict_ok(g, verdict, ts[1] - ts[0], tol_v):
                armed = False
                zero_run_start = None
                continue
            return CrossingVerdict(True, verdict.time, verdict.a, definition,
                                   verdict.neg_witness, verdict.pos_witness, steps)
        if v < -tol_v:
            armed = True
            last_neg = ts[k]
            zero_run_start = None
        elif abs(v) <= tol_v:
            if zero_run_start is None:
                zero_run_start = k
        else:
            zero_run_start = None
    return CrossingVerdict(False, definition=definition)


def _strict_ok(g, verdict: CrossingVerdict, h: float, tol_v: float) -> bool:
    """Sampled check of the extra one-sided sign conditions of the strict definition."""
    left = np.linspace(verdict.a - h, verdict.a, _SUBDIV + 1)[:-1]
    right = np.linspace(verdict.pos_witness, verdict.pos_witness + h, _SUBDIV + 1)
    return not np.any(g(left) > tol_v) and not np.any(g(right) < -tol_v)


def first_crossing(gs, window, tol_t: float = 1e-9, tol_v: float = 0.0, dt: float | None = None,
                   max_bisections: int = 200):
    """``(t_r, j)`` for the earliest crossing, ``j`` 1-based; ties go to the lowest index."""
    if not gs:
        raise ValueError("first_crossing needs at least one guard")
    hits = []
    for j, g in enumerate(gs, start=1):
        v = detect_upcrossing(g, window, tol_t, tol_v, dt, max_bisections)
        if v.crossing:
            hits.append((v.time, j))
    if not hits:
        return None
    t_min = min(t for t, _ in hits)
    j = min(j for t, j in hits if t <= t_min + tol_t)
    return t_min, j
