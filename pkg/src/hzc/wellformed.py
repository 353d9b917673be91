"""Static well-formedness checks run between parsing and the later stages."""

from __future__ import annotations

from .errors import (
    ArityError, DuplicateGlobal, LastOutsideReset, UnboundVariable, Unsupported,
    UnguardedRecursion, WellformednessError,
)
from .syntax import (
    App, BinOp, Const, Delay, DTuple, Embed, Fby, FunDef, GlobalDef, HExpr, If, Last,
    Let, LetRec, Neg, Program, Tuple, Var, contains_last, free_vars,
)


def static_arity(d) -> int | None:
    """Arity of a discrete expression when it is syntactically evident."""
    if isinstance(d, DTuple):
        return len(d.items)
    if isinstance(d, Embed):
        return len(d.expr.items) if isinstance(d.expr, Tuple) else 1
    if isinstance(d, Tuple):
        return len(d.items)
    if isinstance(d, (Const, BinOp, Neg, Last)):
        return 1
    if isinstance(d, Fby):
        a = static_arity(d.first)
        return a if a is not None else static_arity(d.rest)
    if isinstance(d, (Let, LetRec)):
        return static_arity(d.body)
    if isinstance(d, If):
        a = static_arity(d.then)
        return a if a is not None else static_arity(d.orelse)
    return None


class _Checker:
    def __init__(self):
        self.violations: list[WellformednessError] = []

    def add(self, err):
        self.violations.append(err)

    def cexpr(self, e, scope: set, path: str, allow_last: set | None = None):
        for name in sorted(free_vars(e)):
            if name not in scope and not (allow_last and name in allow_last):
                self.add(UnboundVariable(name, path))
        if contains_last(e):
            for name in sorted(_last_names(e)):
                if allow_last is None:
                    self.add(LastOutsideReset(f"'last {name}' outside a reset branch", path))
                elif name not in allow_last:
                    self.add(UnboundVariable(name, path))

    def pred(self, p, scope: set, path: str):
        for name in sorted(free_vars(p)):
            if name not in scope:
                self.add(UnboundVariable(name, path))

    def dexpr(self, d, scope: set, path: str, allow_last: set | None):
        if isinstance(d, (Const,)):
            return
        if isinstance(d, Var):
            if d.name not in scope:
                self.add(UnboundVariable(d.name, path))
            return
        if isinstance(d, Embed):
            self.cexpr(d.expr, scope, path, allow_last)
            return
        if isinstance(d, DTuple):
            for k, it in enumerate(d.items):
                self.dexpr(it, scope, f"{path}[{k}]", allow_last)
            return
        if isinstance(d, Fby):
            self.dexpr(d.first, scope, f"{path}.fby.first", allow_last)
            self.dexpr(d.rest, scope, f"{path}.fby.rest", allow_last)
            return
        if isinstance(d, Let):
            self.type_(d.type, scope, f"{path}.let {d.name}.type")
            self.dexpr(d.rhs, scope, f"{path}.let {d.name}.rhs", allow_last)
            self.dexpr(d.body, scope | {d.name}, f"{path}.let {d.name}.body", allow_last)
            return
        if isinstance(d, LetRec):
            inner = scope | {d.name}
            self.type_(d.type, scope, f"{path}.let rec {d.name}.type")
            if not isinstance(d.rhs, Fby):
                self.add(UnguardedRecursion(f"recursive definition of {d.name!r} must be guarded by fby",
                                            f"{path}.let rec {d.name}.rhs"))
            else:
                # the head of the fby is evaluated before the stream exists
                self.dexpr(d.rhs.first, scope, f"{path}.let rec {d.name}.rhs.fby.first", allow_last)
                self.dexpr(d.rhs.rest, inner, f"{path}.let rec {d.name}.rhs.fby.rest", allow_last)
            self.dexpr(d.body, inner, f"{path}.let rec {d.name}.body", allow_last)
            return
        if isinstance(d, If):
            if d.cond not in scope:
                self.add(UnboundVariable(d.cond, f"{path}.if.cond"))
            self.dexpr(d.then, scope, f"{path}.if.then", allow_last)
            self.dexpr(d.orelse, scope, f"{path}.if.else", allow_last)
            return
        if isinstance(d, App):
            self.add(Unsupported(f"function application '{d.func}' is outside the supported fragment", path))
            return
        if isinstance(d, Delay):
            self.add(Unsupported("'delay' is outside the supported fragment", path))
            return
        self.cexpr(d, scope, path, allow_last)

    def type_(self, t, scope: set, path: str):
        if t is None or t.refinement is None:
            return
        self.pred(t.refinement.pred, scope | {t.var}, path)

    def hexpr(self, h: HExpr, gscope: set):
        m = h.arity
        binder = set(h.binder)
        if len(binder) != m:
            self.add(ArityError("state binder repeats a variable", "main.binder"))
        state_scope = gscope | binder
        if h.state_type is not None:
            self.type_(h.state_type, state_scope, "main.type")
        items = h.deriv_items if m == 1 or isinstance(h.deriv, Tuple) else None
        if m == 1 and isinstance(h.deriv, Tuple):
            self.add(ArityError(f"binder has arity 1 but derivative has arity {len(h.deriv.items)}", "main.der"))
        elif items is None or len(items) != m:
            got = len(h.deriv.items) if isinstance(h.deriv, Tuple) else 1
            self.add(ArityError(f"binder has arity {m} but derivative has arity {got}", "main.der"))
        else:
            for k, it in enumerate(items):
                self.cexpr(it, state_scope, f"main.der[{k}]")
        a = static_arity(h.init)
        if a is not None and a != m:
            self.add(ArityError(f"binder has arity {m} but init has arity {a}", "main.init"))
        self.dexpr(h.init, gscope, "main.init", None)
        if h.init_invariant is not None:
            self.pred(h.init_invariant, state_scope, "main.init.invariant")
        for i, r in enumerate(h.resets, start=1):
            p = f"main.reset[{i}]"
            if isinstance(r.guard, Tuple):
                self.add(ArityError("guard must be scalar", f"{p}.guard"))
            self.cexpr(r.guard, state_scope, f"{p}.guard")
            a = static_arity(r.branch)
            if a is not None and a != m:
                self.add(ArityError(f"binder has arity {m} but reset branch has arity {a}", f"{p}.branch"))
            self.dexpr(r.branch, gscope, f"{p}.branch", binder)
            if r.invariant is not None:
                self.pred(r.invariant, state_scope, f"{p}.invariant")
        self.cexpr(h.body, state_scope, "main.body", binder)
        if h.body_type is not None:
            self.type_(h.body_type, state_scope, "main.body.type")


def _last_names(e) -> set:
    if isinstance(e, Last):
        return {e.name}
    if isinstance(e, BinOp):
        return _last_names(e.left) | _last_names(e.right)
    if isinstance(e, Neg):
        return _last_names(e.operand)
    if isinstance(e, Tuple):
        out = set()
        for it in e.items:
            out |= _last_names(it)
        return out
    return set()


def collect_violations(prog: Program) -> list:
    c = _Checker()
    scope: set = set()
    for g in prog.globals:
        path = f"global {g.name}"
        if g.name in scope:
            c.add(DuplicateGlobal(f"global {g.name!r} defined twice", path))
        if isinstance(g, FunDef):
            c.type_(g.param_type, scope, f"{path}.param.type")
            c.type_(g.ret_type, scope, f"{path}.type")
            c.dexpr(g.body, scope | {g.param, g.name}, f"{path}.body", None)
        elif isinstance(g, GlobalDef):
            c.type_(g.type, scope, f"{path}.type")
            if isinstance(g.rhs, (Fby, Let, LetRec, If, Delay, App, DTuple)):
                c.add(Unsupported(f"global {g.name!r} must be a constant continuous expression", path))
            c.dexpr(g.rhs, scope, f"{path}.rhs", None)
        scope.add(g.name)
    c.hexpr(prog.main, scope)
    return c.violations


def check_wellformed(prog: Program) -> None:
    """Raise the first violation found; every violation is listed on ``.violations``."""
    violations = collect_violations(prog)
    if violations:
        first = violations[0]
        first.violations = violations
        raise first
