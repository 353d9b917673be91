"""Closed-form reference solver for chains of integrators.

Handles dynamics where every right-hand side is either a constant
expression or a single state variable, with no cycles, so each state
component is a polynomial in time.  Crossing times come from exact real
root isolation of the guard polynomials.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import sympy as sp

from .errors import OracleUnsupported
from .flow import Crossed, FlowResult, FlowStats, Horizon, SolverConfig
from .syntax import BinOp, Const, Neg, Var, free_vars

_T = sp.Symbol("t", real=True)
_PREC = 40


def _rat(v) -> sp.Rational:
    f = Fraction(v)
    return sp.Rational(f.numerator, f.denominator)


def _to_sympy(e, env: dict):
    if isinstance(e, Const):
        return _rat(e.value)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -_to_sympy(e.operand, env)
    if isinstance(e, BinOp):
        a, b = _to_sympy(e.left, env), _to_sympy(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b.is_number and b == 0:
            raise OracleUnsupported("division by zero")
        return a / b
    raise OracleUnsupported(f"cannot translate {e!r}")


def trajectories(d: dict, v0, globals_: dict) -> dict:
    """Polynomial ``x_i(t)`` for each state variable, or raise OracleUnsupported."""
    binder = tuple(d)
    consts = {k: _rat(v) for k, v in globals_.items() if k not in binder}
    traj: dict = {}
    visiting: set = set()

    def solve(x):
        if x in traj:
            return traj[x]
        if x in visiting:
            raise OracleUnsupported("cyclic dynamics")
        visiting.add(x)
        rhs = d[x]
        x0 = _rat(v0[binder.index(x)])
        state_refs = free_vars(rhs) & set(binder)
        if isinstance(rhs, Var) and rhs.name in binder:
            inner = solve(rhs.name)
            traj[x] = sp.expand(x0 + sp.integrate(inner, (_T, 0, _T)))
        elif not state_refs:
            c = sp.nsimplify(_to_sympy(rhs, consts))
            traj[x] = sp.expand(x0 + c * _T)
        else:
            raise OracleUnsupported(f"right-hand side of {x} is not a chain shape")
        visiting.discard(x)
        return traj[x]

    for x in binder:
        solve(x)
    return traj


def _poly(expr) -> sp.Poly:
    expr = sp.together(sp.expand(expr))
    num, den = sp.fraction(expr)
    if den.free_symbols:
        raise OracleUnsupported("guard is not polynomial along the flow")
    try:
        return sp.Poly(sp.expand(num / den), _T, domain="QQ")
    except (sp.PolynomialError, sp.CoercionFailed) as exc:
        raise OracleUnsupported(str(exc)) from None


def _roots(p: sp.Poly, t_max) -> list:
    if p.is_zero or p.degree() <= 0:
        return []
    out = []
    for r in sp.real_roots(p):
        val = r.evalf(_PREC)
        if 0 < val <= t_max:
            out.append(val)
    return sorted(set(out))


def first_crossing_exact(p: sp.Poly, tol_v, t_max):
    """First time the polynomial rises above ``tol_v`` after having been below ``-tol_v``."""
    tol = _rat(tol_v)
    cuts = sorted(set(_roots(p - tol, t_max) + _roots(p + tol, t_max)))
    pts = [sp.Integer(0)] + cuts + [sp.Float(t_max, _PREC)]
    armed = p.eval(0) < -tol

    def klass(t):
        v = p.eval(t)
        return "neg" if v < -tol else ("pos" if v > tol else "mid")

    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        c = klass((lo + hi) / 2)
        if c == "pos" and armed:
            # report the exact zero inside the rise rather than the tolerance level
            zeros = [r for r in _roots(p, t_max) if r <= lo]
            return zeros[-1] if zeros else lo
        if c == "neg":
            armed = True
    return None


def oracle_integrate(d: dict, v0, guards, globals_: dict, cfg: SolverConfig = SolverConfig()) -> FlowResult:
    binder = tuple(d)
    v0 = tuple(v0) if isinstance(v0, (tuple, list)) else (v0,)
    traj = trajectories(d, v0, globals_)
    env = {k: _rat(v) for k, v in globals_.items()}
    env.update(traj)
    hits = []
    for j, g in enumerate(guards, start=1):
        p = _poly(_to_sympy(g, env))
        t = first_crossing_exact(p, cfg.tol_v, cfg.t_max)
        if t is not None:
            hits.append((t, j))
    if hits:
        t_r = min(t for t, _ in hits)
        j = min(j for t, j in hits if t <= t_r + cfg.tol_t)
        t_end = t_r
    else:
        t_end = sp.Float(cfg.t_max, _PREC)
    n = max(1, int(np.ceil(float(t_end) / cfg.h)))
    times = np.linspace(0.0, float(t_end), n + 1)
    funcs = [sp.lambdify(_T, traj[x], "numpy") for x in binder]
    states = np.column_stack([np.broadcast_to(f(times), times.shape) for f in funcs]).astype(float)
    states[0] = [float(v) for v in v0]
    gfun = [sp.lambdify(_T, _to_sympy(g, env), "numpy") for g in guards]
    gvals = np.column_stack([np.broadcast_to(f(times), times.shape) for f in gfun]) if guards \
        else np.empty((len(times), 0))
    if hits:
        state = tuple(float(traj[x].subs(_T, t_end).evalf(_PREC)) for x in binder)
        states[-1] = state
        outcome = Crossed(float(t_end), j, state)
    else:
        outcome = Horizon(float(t_end))
    return FlowResult(binder, times, states, gvals.astype(float), outcome, FlowStats(steps=n))
