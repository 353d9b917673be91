"""Pretty-printer producing concrete syntax that re-parses to the same AST."""

from __future__ import annotations

from fractions import Fraction

from .syntax import (
    And, App, BinOp, Box, Const, Delay, DTuple, Embed, Eq, Fby, Float, FunDef,
    GlobalDef, Gt, HExpr, If, Last, Let, LetRec, Neg, Not, PFalse, Product,
    Program, PTrue, PVar, RefType, Tuple, Var,
)

_OPS = {"+": "+.", "-": "-.", "*": "*.", "/": "/."}
_PREC = {"+": 2, "-": 2, "*": 3, "/": 3}


def format_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        s = repr(value)
        if "." not in s and "e" not in s and "n" not in s:
            s += "."
        return s
    value = Fraction(value)
    if value.denominator == 1:
        return f"{value.numerator}."
    den = value.denominator
    k = 0
    while den % 2 == 0 or den % 5 == 0:
        den //= 2 if den % 2 == 0 else 5
        k += 1
    if den == 1:
        sign = "-" if value < 0 else ""
        scaled = abs(value) * 10**k
        digits = str(scaled.numerator).rjust(k + 1, "0")
        return f"{sign}{digits[:-k]}.{digits[-k:]}"
    return f"({value.numerator}. /. {value.denominator}.)"


def _const(c: Const) -> str:
    return c.text if c.text is not None else format_number(c.value)


def _is_negative_literal(e) -> bool:
    return isinstance(e, Const) and not isinstance(e.value, bool) and _const(e).startswith("-")


def pretty_cexpr(e, prec: int = 0) -> str:
    if isinstance(e, Const):
        return _const(e)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Last):
        return f"last {e.name}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{pretty_cexpr(e.left, p)} {_OPS[e.op]} {pretty_cexpr(e.right, p + 1)}"
        return f"({s})" if prec > p else s
    if isinstance(e, Neg):
        s = f"-. {pretty_cexpr(e.operand, 4)}"
        return f"({s})" if prec > 4 else s
    if isinstance(e, Tuple):
        return "(" + ", ".join(pretty_cexpr(i) for i in e.items) + ")"
    raise TypeError(f"not a continuous expression: {e!r}")


def pretty_dexpr(e, prec: int = 0) -> str:
    if isinstance(e, (Const, Var)):
        return pretty_cexpr(e, prec)
    if isinstance(e, Embed):
        return pretty_cexpr(e.expr, prec)
    if isinstance(e, DTuple):
        return "(" + ", ".join(pretty_dexpr(i) for i in e.items) + ")"
    if isinstance(e, Fby):
        s = f"{pretty_dexpr(e.first, 2)} fby {pretty_dexpr(e.rest, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(e, (Let, LetRec)):
        kw = "let rec" if isinstance(e, LetRec) else "let"
        ann = f" : {pretty_type(e.type)}" if e.type is not None else ""
        s = f"{kw} {e.name}{ann} = {pretty_dexpr(e.rhs)} in {pretty_dexpr(e.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, If):
        s = f"if {e.cond} then {pretty_dexpr(e.then)} else {pretty_dexpr(e.orelse)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, App):
        arg = pretty_dexpr(e.arg, 6)
        if _is_negative_literal(e.arg) or (isinstance(e.arg, Embed) and _is_negative_literal(e.arg.expr)):
            arg = f"({arg})"
        s = f"{e.func} {arg}"
        return f"({s})" if prec > 5 else s
    if isinstance(e, Delay):
        return f"delay({pretty_dexpr(e.operand)})"
    raise TypeError(f"not a discrete expression: {e!r}")


def pretty_pred(p, prec: int = 0) -> str:
    if isinstance(p, PTrue):
        return "true"
    if isinstance(p, PFalse):
        return "false"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, Eq):
        return f"{pretty_cexpr(p.left, 2)} = {pretty_cexpr(p.right, 2)}"
    if isinstance(p, Gt):
        return f"{pretty_cexpr(p.left, 2)} > {pretty_cexpr(p.right, 2)}"
    if isinstance(p, Not):
        if isinstance(p.operand, Gt):
            return f"{pretty_cexpr(p.operand.left, 2)} <= {pretty_cexpr(p.operand.right, 2)}"
        return f"not ({pretty_pred(p.operand)})"
    if isinstance(p, And):
        s = f"{pretty_pred(p.left, 1)} && {pretty_pred(p.right, 2)}"
        return f"({s})" if prec > 1 else s
    raise TypeError(f"not a predicate: {p!r}")


def pretty_base(b, nested: bool = False) -> str:
    if isinstance(b, Float):
        return "float"
    s = " * ".join(pretty_base(i, True) for i in b.items)
    return f"({s})" if nested else s


def pretty_type(t: RefType) -> str:
    if t.refinement is None and t.var == "v":
        return pretty_base(t.base)
    pred = pretty_pred(t.refinement.pred) if t.refinement is not None else "true"
    return f"{{ {t.var} : {pretty_base(t.base)} | box({pred}) }}"


def pretty_hexpr(h: HExpr) -> str:
    binder = h.binder[0] if len(h.binder) == 1 else "(" + ", ".join(h.binder) + ")"
    ann = f" : {pretty_type(h.state_type)}" if h.state_type is not None else ""
    lines = [f"let rec der {binder}{ann} = {pretty_cexpr(h.deriv, 2)} init {_branch(h.init)}"]
    if h.init_invariant is not None:
        lines.append(f"  invariant {pretty_pred(h.init_invariant)}")
    if h.resets:
        lines.append("  reset")
        for r in h.resets:
            line = f"  | up({pretty_cexpr(r.guard)}) -> {_branch(r.branch)}"
            if r.invariant is not None:
                line += f" invariant {pretty_pred(r.invariant)}"
            lines.append(line)
    body = f"in {pretty_cexpr(h.body)}"
    if h.body_type is not None:
        body += f" : {pretty_type(h.body_type)}"
    lines.append(body)
    return "\n".join(lines)


def _branch(d) -> str:
    s = pretty_dexpr(d, 1)
    return s


def pretty_global(g) -> str:
    if isinstance(g, FunDef):
        pt = f" : {pretty_type(g.param_type)}" if g.param_type is not None else ""
        rt = f" : {pretty_type(g.ret_type)}" if g.ret_type is not None else ""
        return f"let {g.name} ({g.param}{pt}){rt} = {pretty_dexpr(g.body)}"
    ann = f" : {pretty_type(g.type)}" if g.type is not None else ""
    rhs = g.rhs
    text = pretty_dexpr(rhs) if not isinstance(rhs, (BinOp, Neg, Tuple, Last)) else pretty_cexpr(rhs)
    return f"let {g.name}{ann} = {text}"


def pretty(node) -> str:
    """Render any AST node (program, hybrid expression, expression, predicate, type)."""
    if isinstance(node, Program):
        parts = [pretty_global(g) for g in node.globals]
        parts.append(pretty_hexpr(node.main))
        return "\n".join(parts) + "\n"
    if isinstance(node, HExpr):
        return pretty_hexpr(node)
    if isinstance(node, (GlobalDef, FunDef)):
        return pretty_global(node)
    if isinstance(node, RefType):
        return pretty_type(node)
    if isinstance(node, Box):
        return f"box({pretty_pred(node.pred)})"
    if isinstance(node, (PTrue, PFalse, PVar, Eq, Gt, Not, And)):
        return pretty_pred(node)
    if isinstance(node, (Embed, DTuple, Fby, Let, LetRec, If, App, Delay)):
        return pretty_dexpr(node)
    return pretty_cexpr(node)
