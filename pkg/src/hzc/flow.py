"""Fixed-step integration of one continuous segment with guard monitoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DivisionByZero, NonFiniteState, UnboundVariable
from .symbolic import eval_cexpr, lie_expr
from .syntax import contains_last, free_vars


@dataclass(frozen=True)
class SolverConfig:
    h: float = 1e-3
    t_max: float = 100.0
    tol_t: float = 1e-9
    tol_v: float = 1e-9
    max_bisections: int = 200
    chunk: int = 16384

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if not self.t_max > 0:
            raise ValueError("horizon must be positive")
        if self.tol_t <= 0 or self.tol_v < 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Crossed:
    t_r: float
    j: int  # 1-based guard index
    state: tuple


@dataclass(frozen=True)
class Horizon:
    t_end: float


@dataclass
class FlowStats:
    steps: int = 0
    bisections: int = 0
    eps: float = 0.0  # distance past t_r at which the guard was seen positive


@dataclass
class FlowResult:
    binder: tuple
    times: np.ndarray
    states: np.ndarray
    guards: np.ndarray
    outcome: object
    stats: FlowStats = field(default_factory=FlowStats)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def crossed(self) -> bool:
        return isinstance(self.outcome, Crossed)

    def at(self, t: float) -> dict:
        """Linearly interpolated state at local time ``t``."""
        return {x: float(np.interp(t, self.times, self.states[:, i])) for i, x in enumerate(self.binder)}


def _check_closed(exprs, scope, what):
    for e in exprs:
        if contains_last(e):
            raise TypeError(f"'last' may not appear in a {what}")
        missing = free_vars(e) - scope
        if missing:
            raise UnboundVariable(sorted(missing)[0])


def integrate(d: dict, v0, guards, globals_: dict, cfg: SolverConfig = SolverConfig()) -> FlowResult:
    """Integrate ``x' = d(x)`` from ``v0`` until the first guard up-crossing or ``cfg.t_max``.

    ``d`` maps each state variable, in binder order, to its right-hand side.
    """
    binder = tuple(d)
    m, ng = len(binder), len(guards)
    v0 = tuple(float(v) for v in (v0 if isinstance(v0, (tuple, list)) else (v0,)))
    if len(v0) != m:
        raise ValueError(f"initial value of arity {len(v0)} for {m} state variables")
    gnames = sorted(globals_)
    scope = set(binder) | set(gnames)
    _check_closed(d.values(), scope, "derivative")
    _check_closed(guards, scope, "guard")
    layout = {x: i for i, x in enumerate(binder)}
    for k, name in enumerate(gnames):
        if name not in layout:
            layout[name] = m + k
    prog = K.Program([d[x] for x in binder] + list(guards), layout)
    if prog.max_depth > 64:
        raise ValueError("expression too deep for the evaluation stack")
    slots = np.zeros(m + len(gnames), dtype=np.float64)
    for name in gnames:
        if layout[name] >= m:
            slots[layout[name]] = float(globals_[name])

    armed = np.zeros(max(ng, 1), dtype=np.bool_)
    env0 = dict(globals_)
    env0.update(zip(binder, v0))
    for j, u in enumerate(guards):
        # starting at zero and strictly decreasing: the guard is below zero right away
        try:
            if abs(float(eval_cexpr(u, env0))) <= cfg.tol_v and \
                    float(eval_cexpr(lie_expr(u, d), env0)) * cfg.h < -cfg.tol_v:
                armed[j] = True
        except (DivisionByZero, ZeroDivisionError):
            pass
    hits = np.zeros(max(ng, 1), dtype=np.bool_)
    t_parts, y_parts, g_parts = [], [], []
    y = np.array(v0, dtype=np.float64)
    t = 0.0
    k0 = 0
    stats = FlowStats()
    rows = cfg.chunk
    while True:
        out_t = np.empty(rows)
        out_y = np.empty((rows, m))
        out_g = np.empty((rows, max(ng, 1)))
        n, status, fired = K.rk4_block(y, t, k0, 0.0, cfg.h, cfg.t_max, m, ng, prog.code, prog.consts,
                                       prog.starts, slots, cfg.tol_v, armed, out_t, out_y, out_g, hits)
        first = 0 if not t_parts else 1
        t_parts.append(out_t[first:n])
        y_parts.append(out_y[first:n])
        g_parts.append(out_g[first:n, :ng])
        stats.steps += n - 1
        k0 += n - 1
        if status == K.STATUS_DIV_ZERO:
            raise DivisionByZero(f"division by zero near t={out_t[n - 1]:.12g}")
        if status == K.STATUS_NONFINITE:
            raise NonFiniteState(f"state became non-finite near t={out_t[n - 1]:.12g}", float(out_t[n - 1]))
        t = float(out_t[n - 1])
        y = out_y[n - 1].copy()
        if fired or t >= cfg.t_max or n < 2:
            break
    times = np.concatenate(t_parts)
    states = np.concatenate(y_parts)
    gvals = np.concatenate(g_parts)
    if not fired:
        return FlowResult(binder, times, states, gvals, Horizon(t), stats)

    t_prev, t_hit = float(times[-2]), float(times[-1])
    y_prev = states[-2].copy()
    buf = np.empty(m)
    cands = []
    for j in np.flatnonzero(hits[:ng]):
        lo, hi = 0.0, t_hit - t_prev
        if gvals[-2, j] >= -cfg.tol_v:
            lo = K.first_negative_probe(y_prev, hi, m, int(j), prog.code, prog.consts, prog.starts,
                                        slots, cfg.tol_v)
        its = 0
        while hi - lo > cfg.tol_t and its < cfg.max_bisections:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            val, st = K.guard_after(y_prev, mid, m, int(j), prog.code, prog.consts, prog.starts, slots, buf)
            if st == K.STATUS_DIV_ZERO:
                raise DivisionByZero("division by zero while localizing a crossing")
            if val > cfg.tol_v:
                hi = mid
            else:
                lo = mid
            its += 1
        stats.bisections += its
        cands.append((lo, int(j) + 1))
    tau = min(c[0] for c in cands)
    j = min(c[1] for c in cands if c[0] <= tau + cfg.tol_t)
    t_r = t_prev + tau
    K.guard_after(y_prev, tau, m, j - 1, prog.code, prog.consts, prog.starts, slots, buf)
    state = tuple(float(v) for v in buf)
    env = dict(globals_)
    env.update(zip(binder, state))
    g_at = np.array([float(eval_cexpr(gd, env)) for gd in guards])
    times = np.append(times[:-1], t_r)
    states = np.vstack([states[:-1], buf])
    gvals = np.vstack([gvals[:-1], g_at])
    stats.eps = t_hit - t_r
    return FlowResult(binder, times, states, gvals, Crossed(t_r, j, state), stats)
