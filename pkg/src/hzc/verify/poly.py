"""Sparse multivariate polynomials over the rationals.

A polynomial is a dict from monomials to nonzero ``Fraction`` coefficients;
a monomial is a sorted tuple of ``(variable, power)`` pairs, ``()`` being
the constant monomial.
"""

from __future__ import annotations

from fractions import Fraction

from ..syntax import BinOp, Const, Neg, Var


class NonPolynomial(Exception):
    pass


def const(c) -> dict:
    c = Fraction(c)
    return {(): c} if c else {}


def var(name: str) -> dict:
    return {((name, 1),): Fraction(1)}


def add(p: dict, q: dict, scale=1) -> dict:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def scale(p: dict, k) -> dict:
    k = Fraction(k)
    return {m: c * k for m, c in p.items()} if k else {}


def _mono_mul(a: tuple, b: tuple) -> tuple:
    pw = dict(a)
    for x, e in b:
        pw[x] = pw.get(x, 0) + e
    return tuple(sorted(pw.items()))


def mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def is_const(p: dict) -> bool:
    return all(m == () for m in p)


def const_value(p: dict) -> Fraction:
    return p.get((), Fraction(0))


def degree(m: tuple) -> int:
    return sum(e for _, e in m)


def variables(p: dict) -> set:
    return {x for m in p for x, _ in m}


def from_cexpr(e, consts: dict | None = None) -> dict:
    """Polynomial of a continuous expression; ``consts`` maps names to known values."""
    consts = consts or {}
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            raise NonPolynomial("boolean constant in arithmetic")
        return const(e.value)
    if isinstance(e, Var):
        if e.name in consts:
            return const(consts[e.name])
        return var(e.name)
    if isinstance(e, Neg):
        return scale(from_cexpr(e.operand, consts), -1)
    if isinstance(e, BinOp):
        a = from_cexpr(e.left, consts)
        b = from_cexpr(e.right, consts)
        if e.op == "+":
            return add(a, b)
        if e.op == "-":
            return add(a, b, -1)
        if e.op == "*":
            return mul(a, b)
        if not is_const(b) or not const_value(b):
            raise NonPolynomial("division by a non-constant or zero")
        return scale(a, 1 / const_value(b))
    raise NonPolynomial(f"cannot normalize {e!r}")


def substitute(p: dict, values: dict) -> dict:
    """Replace variables by rational constants."""
    out: dict = {}
    for m, c in p.items():
        k = c
        rest = []
        for x, e in m:
            if x in values:
                k *= Fraction(values[x]) ** e
            else:
                rest.append((x, e))
        if k:
            out = add(out, {tuple(rest): k})
    return out


def evaluate(p: dict, values: dict) -> Fraction:
    total = Fraction(0)
    for m, c in p.items():
        t = c
        for x, e in m:
            t *= Fraction(values.get(x, 0)) ** e
        total += t
    return total


def mono_name(m: tuple) -> str:
    return "*".join(x if e == 1 else f"{x}^{e}" for x, e in m)


def is_square(m: tuple) -> bool:
    return bool(m) and all(e % 2 == 0 for _, e in m)
