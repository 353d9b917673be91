"""AST for the hybrid synchronous language and its refinement types.

Continuous expressions (``CExpr``) are shared between ODE right-hand sides,
zero-crossing guards, predicates and the arithmetic embedded in discrete
code.  Discrete expressions (``DExpr``) wrap continuous arithmetic with
:class:`Embed`.  All nodes are frozen dataclasses so ASTs compare
structurally and can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union


# --------------------------------------------------------------------------
# continuous expressions


@dataclass(frozen=True)
class Const:
    value: Union[Fraction, float, bool]
    text: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Last:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "CExpr"
    right: "CExpr"


@dataclass(frozen=True)
class Neg:
    operand: "CExpr"


@dataclass(frozen=True)
class Tuple:
    items: tuple


CExpr = Union[Const, Var, Last, BinOp, Neg, Tuple]
ARITH_OPS = ("+", "-", "*", "/")


# --------------------------------------------------------------------------
# types and predicates


@dataclass(frozen=True)
class Float:
    pass


@dataclass(frozen=True)
class Product:
    items: tuple


BaseType = Union[Float, Product]


@dataclass(frozen=True)
class PTrue:
    pass


@dataclass(frozen=True)
class PFalse:
    pass


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class Eq:
    left: CExpr
    right: CExpr


@dataclass(frozen=True)
class Gt:
    left: CExpr
    right: CExpr


@dataclass(frozen=True)
class And:
    left: "StatePred"
    right: "StatePred"


@dataclass(frozen=True)
class Not:
    operand: "StatePred"


StatePred = Union[PTrue, PFalse, PVar, Eq, Gt, And, Not]


@dataclass(frozen=True)
class Box:
    pred: StatePred


@dataclass(frozen=True)
class RefType:
    base: BaseType
    var: str = "v"
    refinement: Box | None = None

    @property
    def pred(self) -> StatePred:
        return self.refinement.pred if self.refinement is not None else PTrue()


def le(a: CExpr, b: CExpr) -> StatePred:
    return Not(Gt(a, b))


def lt(a: CExpr, b: CExpr) -> StatePred:
    return Gt(b, a)


def ge(a: CExpr, b: CExpr) -> StatePred:
    return Not(Gt(b, a))


def conj(preds) -> StatePred:
    out = None
    for p in preds:
        if isinstance(p, PTrue):
            continue
        out = p if out is None else And(out, p)
    return PTrue() if out is None else out


def conjuncts(p: StatePred) -> list:
    if isinstance(p, And):
        return conjuncts(p.left) + conjuncts(p.right)
    if isinstance(p, PTrue):
        return []
    return [p]


# --------------------------------------------------------------------------
# discrete expressions


@dataclass(frozen=True)
class Embed:
    expr: CExpr


@dataclass(frozen=True)
class DTuple:
    items: tuple


@dataclass(frozen=True)
class Let:
    name: str
    type: RefType | None
    rhs: "DExpr"
    body: "DExpr"


@dataclass(frozen=True)
class LetRec:
    name: str
    type: RefType | None
    rhs: "DExpr"
    body: "DExpr"


@dataclass(frozen=True)
class App:
    func: str
    arg: "DExpr"


@dataclass(frozen=True)
class Fby:
    first: "DExpr"
    rest: "DExpr"


@dataclass(frozen=True)
class Delay:
    operand: "DExpr"


@dataclass(frozen=True)
class If:
    cond: str
    then: "DExpr"
    orelse: "DExpr"


DExpr = Union[Const, Var, Embed, DTuple, Let, LetRec, App, Fby, Delay, If]


# --------------------------------------------------------------------------
# hybrid expressions and programs


@dataclass(frozen=True)
class Reset:
    guard: CExpr
    branch: DExpr
    invariant: StatePred | None = None


@dataclass(frozen=True)
class HExpr:
    binder: tuple
    state_type: RefType | None
    deriv: CExpr
    init: DExpr
    init_invariant: StatePred | None
    resets: tuple
    body: CExpr
    body_type: RefType | None = None

    @property
    def arity(self) -> int:
        return len(self.binder)

    @property
    def deriv_items(self) -> tuple:
        if len(self.binder) == 1:
            return (self.deriv,)
        return self.deriv.items

    @property
    def guards(self) -> tuple:
        return tuple(r.guard for r in self.resets)

    @property
    def safety(self) -> StatePred:
        """State refinement with the refinement variable resolved to the binder."""
        if self.state_type is None:
            return PTrue()
        p = self.state_type.pred
        if len(self.binder) == 1 and self.state_type.var != self.binder[0]:
            p = rename_pred(p, {self.state_type.var: self.binder[0]})
        return p


@dataclass(frozen=True)
class GlobalDef:
    name: str
    type: RefType | None
    rhs: Union[CExpr, DExpr]


@dataclass(frozen=True)
class FunDef:
    name: str
    param: str
    param_type: RefType | None
    ret_type: RefType | None
    body: DExpr


@dataclass(frozen=True)
class Program:
    globals: tuple
    main: HExpr


# --------------------------------------------------------------------------
# traversal helpers


def free_vars(e) -> set:
    """Names read by a continuous expression or predicate (``last x`` counts as x)."""
    if isinstance(e, (Var, Last, PVar)):
        return {e.name}
    if isinstance(e, (Const, PTrue, PFalse)):
        return set()
    if isinstance(e, (BinOp, Eq, Gt, And)):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, (Neg, Not)):
        return free_vars(e.operand)
    if isinstance(e, Tuple):
        out = set()
        for it in e.items:
            out |= free_vars(it)
        return out
    raise TypeError(f"not a continuous expression or predicate: {e!r}")


def contains_last(e) -> bool:
    if isinstance(e, Last):
        return True
    if isinstance(e, (BinOp, Eq, Gt, And)):
        return contains_last(e.left) or contains_last(e.right)
    if isinstance(e, (Neg, Not)):
        return contains_last(e.operand)
    if isinstance(e, Tuple):
        return any(contains_last(i) for i in e.items)
    return False


def substitute(e, mapping: dict, last: dict | None = None):
    """Replace variables in a CExpr / StatePred by expressions.

    ``last`` optionally maps names for ``last x`` occurrences; when omitted,
    ``last x`` is left alone.
    """
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Last):
        if last is not None and e.name in last:
            return last[e.name]
        return e
    if isinstance(e, (Const, PTrue, PFalse)):
        return e
    if isinstance(e, PVar):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping, last), substitute(e.right, mapping, last))
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping, last))
    if isinstance(e, Tuple):
        return Tuple(tuple(substitute(i, mapping, last) for i in e.items))
    if isinstance(e, Eq):
        return Eq(substitute(e.left, mapping, last), substitute(e.right, mapping, last))
    if isinstance(e, Gt):
        return Gt(substitute(e.left, mapping, last), substitute(e.right, mapping, last))
    if isinstance(e, And):
        return And(substitute(e.left, mapping, last), substitute(e.right, mapping, last))
    if isinstance(e, Not):
        return Not(substitute(e.operand, mapping, last))
    raise TypeError(f"cannot substitute into {e!r}")


def rename_pred(p, names: dict):
    return substitute(p, {k: Var(v) for k, v in names.items()})


def tuple_items(e: CExpr) -> tuple:
    return e.items if isinstance(e, Tuple) else (e,)
