"""Evaluation of expressions and predicates, Lie derivatives, and guard activity."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DivisionByZero, UnboundVariable, UnsupportedPredicateShape
from .syntax import (
    And, BinOp, Const, Eq, Gt, Last, Neg, Not, PFalse, PTrue, PVar, Tuple, Var, conj, le,
)


def _num(value, exact: bool):
    if isinstance(value, bool):
        return value
    if exact:
        return Fraction(value)
    return float(value)


def eval_cexpr(e, env: dict, exact: bool = False, last: dict | None = None):
    """Evaluate ``e`` in state ``env``.

    Values in ``env`` may be numpy arrays, in which case evaluation is
    vectorized.  ``last`` supplies pre-reset values for ``last x``.
    """
    if isinstance(e, Const):
        return _num(e.value, exact)
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Last):
        if last is None or e.name not in last:
            raise UnboundVariable(f"last {e.name}")
        return last[e.name]
    if isinstance(e, Neg):
        return -eval_cexpr(e.operand, env, exact, last)
    if isinstance(e, BinOp):
        a = eval_cexpr(e.left, env, exact, last)
        b = eval_cexpr(e.right, env, exact, last)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise DivisionByZero(f"division by zero in {e}")
        return a / b
    if isinstance(e, Tuple):
        return tuple(eval_cexpr(i, env, exact, last) for i in e.items)
    raise TypeError(f"not a continuous expression: {e!r}")


def eval_pred(p, env: dict, exact: bool = False):
    if isinstance(p, PTrue):
        return True
    if isinstance(p, PFalse):
        return False
    if isinstance(p, PVar):
        try:
            return env[p.name]
        except KeyError:
            raise UnboundVariable(p.name) from None
    if isinstance(p, Eq):
        return eval_cexpr(p.left, env, exact) == eval_cexpr(p.right, env, exact)
    if isinstance(p, Gt):
        return eval_cexpr(p.left, env, exact) > eval_cexpr(p.right, env, exact)
    if isinstance(p, And):
        return np.logical_and(eval_pred(p.left, env, exact), eval_pred(p.right, env, exact)) \
            if _is_array(env) else (eval_pred(p.left, env, exact) and eval_pred(p.right, env, exact))
    if isinstance(p, Not):
        v = eval_pred(p.operand, env, exact)
        return np.logical_not(v) if isinstance(v, np.ndarray) else not v
    raise TypeError(f"not a predicate: {p!r}")


def _is_array(env: dict) -> bool:
    return any(isinstance(v, np.ndarray) for v in env.values())


# --------------------------------------------------------------------------
# smart constructors: constant folding plus 0/1 identities


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _is_const(e, value=None) -> bool:
    if not isinstance(e, Const) or isinstance(e.value, bool):
        return False
    return value is None or e.value == value


def _fold(op, a, b) -> Const:
    x, y = a.value, b.value
    if op == "+":
        r = x + y
    elif op == "-":
        r = x - y
    elif op == "*":
        r = x * y
    else:
        r = x / y
    return Const(r)


def add(a, b):
    if _is_const(a) and _is_const(b):
        return _fold("+", a, b)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return _fold("-", a, b)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return _fold("*", a, b)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return BinOp("*", a, b)


def div(a, b):
    if _is_const(a) and _is_const(b) and b.value != 0:
        return _fold("/", a, b)
    if _is_const(a, 0) and not _is_const(b, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    return BinOp("/", a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def simplify(e):
    """Bottom-up constant folding with the 0/1 identities."""
    if isinstance(e, BinOp):
        a, b = simplify(e.left), simplify(e.right)
        return {"+": add, "-": sub, "*": mul, "/": div}[e.op](a, b)
    if isinstance(e, Neg):
        return neg(simplify(e.operand))
    if isinstance(e, Tuple):
        return Tuple(tuple(simplify(i) for i in e.items))
    return e


def lie_expr(e, d: dict):
    """Time derivative of ``e`` along the vector field ``d`` (name -> CExpr)."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return d.get(e.name, ZERO)
    if isinstance(e, Last):
        raise TypeError("'last' has no derivative along a flow")
    if isinstance(e, Neg):
        return neg(lie_expr(e.operand, d))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = lie_expr(a, d), lie_expr(b, d)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        # quotient rule
        return div(sub(mul(da, b), mul(a, db)), mul(b, b))
    if isinstance(e, Tuple):
        return Tuple(tuple(lie_expr(i, d) for i in e.items))
    raise TypeError(f"not a continuous expression: {e!r}")


def lie_pred(p, d: dict):
    """Differential-invariant derivative of a conjunction of atoms."""
    if isinstance(p, (PTrue, PFalse, PVar)):
        return PTrue()
    if isinstance(p, Eq):
        return Eq(lie_expr(p.left, d), lie_expr(p.right, d))
    if isinstance(p, Gt):
        # e1 > e2 behaves as e2 < e1; its derivative condition is de2 <= de1
        return le(lie_expr(p.right, d), lie_expr(p.left, d))
    if isinstance(p, Not) and isinstance(p.operand, Gt):
        g = p.operand
        return le(lie_expr(g.left, d), lie_expr(g.right, d))
    if isinstance(p, And):
        return And(lie_pred(p.left, d), lie_pred(p.right, d))
    raise UnsupportedPredicateShape(f"no differential-invariant rule for {p!r}")


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ActiveFacts:
    facts: object  # StatePred: conjunction of u_i <= 0
    indices: tuple  # 1-based guard indices

    def __contains__(self, i: int) -> bool:
        return i in self.indices


def active(v, guards, d: dict, globals_: dict, binder=None) -> ActiveFacts:
    """Guards that start nonpositive and cannot cross away from zero at once.

    Guard ``u`` is active at ``v`` iff ``u(v) < 0`` or ``u(v) = 0`` and the
    derivative of ``u`` along ``d`` is negative there.
    """
    names = tuple(binder) if binder is not None else tuple(d)
    vals = tuple(v) if isinstance(v, (tuple, list)) else (v,)
    if len(vals) != len(names):
        raise ValueError(f"value of arity {len(vals)} for a binder of arity {len(names)}")
    env = dict(globals_)
    env.update(zip(names, vals))
    idx = []
    for i, u in enumerate(guards, start=1):
        val = eval_cexpr(u, env)
        if val < 0 or (val == 0 and eval_cexpr(lie_expr(u, d), env) < 0):
            idx.append(i)
    facts = conj(le(guards[i - 1], ZERO) for i in idx)
    return ActiveFacts(facts, tuple(idx))
