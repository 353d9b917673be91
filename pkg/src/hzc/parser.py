"""Recursive-descent parser for ``.hzc`` sources.

Expressions are first parsed into a position-neutral raw tree and then
converted to continuous or discrete ASTs depending on where they occur,
which is where the continuous/discrete stratification is enforced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, StratificationError
from .syntax import (
    And, App, BinOp, Box, Const, Delay, DTuple, Embed, Eq, Fby, Float, FunDef,
    GlobalDef, Gt, HExpr, If, Last, Let, LetRec, Neg, Not, PFalse, Product,
    Program, PTrue, PVar, RefType, Reset, Tuple, Var,
)

KEYWORDS = {
    "let", "rec", "der", "init", "reset", "up", "in", "last", "fby", "delay",
    "if", "then", "else", "and", "not", "true", "false", "box", "float",
    "invariant",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\+\.|-\.|\*\.|/\.|->|<=|>=|&&|/\\|[-+*/<>=|,;:(){}])
    """,
    re.VERBOSE,
)

_ARITH = {"+": "+", "+.": "+", "-": "-", "-.": "-", "*": "*", "*.": "*", "/": "/", "/.": "/"}


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, kw, op, eof
    text: str
    line: int
    col: int


def _strip_comments(text: str) -> str:
    out = []
    depth = 0
    i = 0
    while i < len(text):
        if text.startswith("(*", i):
            depth += 1
            out.append("  ")
            i += 2
        elif depth and text.startswith("*)", i):
            depth -= 1
            out.append("  ")
            i += 2
        elif depth:
            out.append("\n" if text[i] == "\n" else " ")
            i += 1
        else:
            out.append(text[i])
            i += 1
    if depth:
        raise ParseError("unterminated comment", 0, 0, {"*)"})
    return "".join(out)


def tokenize(text: str) -> list:
    text = _strip_comments(text)
    tokens = []
    pos, line, col = 0, 1, 1

    def operand_end() -> bool:
        if not tokens:
            return False
        t = tokens[-1]
        return t.kind in ("num", "ident") or (t.kind == "op" and t.text in (")", "}"))

    while pos < len(text):
        if text[pos] in "-" and not operand_end():
            m = re.compile(r"-\.?(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)").match(text, pos)
            if m:
                tokens.append(Token("num", "-" + m.group(1), line, col))
                col += m.end() - pos
                pos = m.end()
                continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, set())
        s = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# --------------------------------------------------------------------------
# raw expression tree


@dataclass(frozen=True)
class RNum:
    value: object
    text: str


@dataclass(frozen=True)
class RName:
    name: str


@dataclass(frozen=True)
class RLast:
    name: str


@dataclass(frozen=True)
class RBin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class RNeg:
    operand: object


@dataclass(frozen=True)
class RTuple:
    items: tuple


@dataclass(frozen=True)
class RFby:
    first: object
    rest: object


@dataclass(frozen=True)
class RLet:
    rec: bool
    name: str
    type: object
    rhs: object
    body: object


@dataclass(frozen=True)
class RIf:
    cond: str
    then: object
    orelse: object


@dataclass(frozen=True)
class RApp:
    func: str
    arg: object


@dataclass(frozen=True)
class RDelay:
    operand: object


_DISCRETE = (RFby, RLet, RIf, RApp, RDelay)


def _is_pure(r) -> bool:
    if isinstance(r, _DISCRETE):
        return False
    if isinstance(r, RBin):
        return _is_pure(r.left) and _is_pure(r.right)
    if isinstance(r, RNeg):
        return _is_pure(r.operand)
    if isinstance(r, RTuple):
        return all(_is_pure(i) for i in r.items)
    return True


_CONSTRUCT_NAMES = {RFby: "fby", RLet: "let", RIf: "if", RApp: "function application", RDelay: "delay"}


def to_cexpr(r, where: str = "continuous position"):
    if isinstance(r, RNum):
        return Const(r.value, r.text)
    if isinstance(r, RName):
        return Var(r.name)
    if isinstance(r, RLast):
        return Last(r.name)
    if isinstance(r, RBin):
        return BinOp(r.op, to_cexpr(r.left, where), to_cexpr(r.right, where))
    if isinstance(r, RNeg):
        return Neg(to_cexpr(r.operand, where))
    if isinstance(r, RTuple):
        return Tuple(tuple(to_cexpr(i, where) for i in r.items))
    name = _CONSTRUCT_NAMES.get(type(r), type(r).__name__)
    raise StratificationError(f"discrete construct '{name}' in {where}", path=where)


def to_dexpr(r, where: str = "discrete position"):
    if isinstance(r, RNum):
        return Const(r.value, r.text)
    if isinstance(r, RName):
        return Var(r.name)
    if _is_pure(r):
        return Embed(to_cexpr(r, where))
    if isinstance(r, RTuple):
        return DTuple(tuple(to_dexpr(i, where) for i in r.items))
    if isinstance(r, RFby):
        return Fby(to_dexpr(r.first, where), to_dexpr(r.rest, where))
    if isinstance(r, RLet):
        cls = LetRec if r.rec else Let
        return cls(r.name, r.type, to_dexpr(r.rhs, where), to_dexpr(r.body, where))
    if isinstance(r, RIf):
        return If(r.cond, to_dexpr(r.then, where), to_dexpr(r.orelse, where))
    if isinstance(r, RApp):
        return App(r.func, to_dexpr(r.arg, where))
    if isinstance(r, RDelay):
        return Delay(to_dexpr(r.operand, where))
    raise StratificationError("arithmetic over discrete subterms is not expressible", path=where)


# --------------------------------------------------------------------------


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("kw", "op") and t.text in texts

    def accept(self, *texts) -> Token | None:
        if self.at(*texts):
            t = self.tok
            self.i += 1
            return t
        return None

    def error(self, expected) -> ParseError:
        t = self.tok
        found = t.text or "end of input"
        exp = set(expected)
        return ParseError(f"expected {' or '.join(sorted(exp))}, found {found!r}", t.line, t.col, exp)

    def expect(self, *texts) -> Token:
        t = self.accept(*texts)
        if t is None:
            raise self.error(texts)
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            raise self.error({"identifier"})
        if "__" in t.text:
            raise ParseError(f"identifier {t.text!r} may not contain '__'", t.line, t.col, {"identifier"})
        self.i += 1
        return t.text

    # ---------------- program
    def program(self) -> Program:
        globs = []
        names = []
        while self.at("let") and not (self.peek().text == "rec" and self.peek(2).text == "der"):
            globs.extend(self.global_defs())
        if not self.at("let"):
            raise self.error({"let"})
        main = self.hexpr()
        if self.tok.kind != "eof":
            raise self.error({"end of input"})
        del names
        return Program(tuple(globs), main)

    def global_defs(self) -> list:
        self.expect("let")
        if self.tok.kind == "ident" and self.peek().text == "(":
            name = self.ident()
            self.expect("(")
            param = self.ident()
            ptype = self.reftype() if self.accept(":") else None
            self.expect(")")
            rtype = self.reftype() if self.accept(":") else None
            self.expect("=")
            body = to_dexpr(self.expr(), f"body of function {name}")
            return [FunDef(name, param, ptype, rtype, body)]
        out = []
        while True:
            name = self.ident()
            typ = self.reftype() if self.accept(":") else None
            self.expect("=")
            raw = self.expr()
            rhs = to_cexpr(raw) if _is_pure(raw) else to_dexpr(raw, f"global {name}")
            out.append(GlobalDef(name, typ, rhs))
            if not self.accept(";"):
                return out

    def hexpr(self) -> HExpr:
        self.expect("let")
        self.expect("rec")
        self.expect("der")
        if self.accept("("):
            binder = [self.ident()]
            while self.accept(","):
                binder.append(self.ident())
            self.expect(")")
        else:
            binder = [self.ident()]
        stype = self.reftype() if self.accept(":") else None
        self.expect("=")
        deriv, init = self.derinit(len(binder))
        inv = self.pred() if self.accept("invariant") else None
        resets = []
        if self.accept("reset"):
            first = True
            while self.at("|", "up"):
                if not self.accept("|") and not first:
                    break
                first = False
                self.expect("up")
                self.expect("(")
                graw = self.expr()
                self.expect(")")
                guard = to_cexpr(graw, f"guard of reset {len(resets) + 1}")
                self.expect("->")
                branch = to_dexpr(self.expr(), f"reset {len(resets) + 1}")
                binv = self.pred() if self.accept("invariant") else None
                resets.append(Reset(guard, branch, binv))
            if not resets:
                raise self.error({"up", "|"})
        self.expect("in")
        body = to_cexpr(self.expr(), "body of the hybrid expression")
        btype = self.reftype() if self.accept(":") else None
        return HExpr(tuple(binder), stype, deriv, init, inv, tuple(resets), body, btype)

    def derinit(self, m: int):
        start = self.i
        if self.at("("):
            try:
                self.i += 1
                ders, inits = [], []
                while True:
                    d = self.expr()
                    if not self.accept("init"):
                        raise _Backtrack()
                    ders.append(d)
                    inits.append(self.expr())
                    if not self.accept(","):
                        break
                self.expect(")")
                if len(ders) == 1:
                    return (to_cexpr(ders[0], "derivative"), to_dexpr(inits[0], "init"))
                return (to_cexpr(RTuple(tuple(ders)), "derivative"), to_dexpr(RTuple(tuple(inits)), "init"))
            except _Backtrack:
                self.i = start
        d = self.expr()
        self.expect("init")
        i = self.expr()
        return to_cexpr(d, "derivative"), to_dexpr(i, "init")

    # ---------------- types
    def base(self):
        items = [self.base_atom()]
        while self.accept("*", "*."):
            items.append(self.base_atom())
        return items[0] if len(items) == 1 else Product(tuple(items))

    def base_atom(self):
        if self.accept("("):
            b = self.base()
            self.expect(")")
            return b
        self.expect("float")
        return Float()

    def reftype(self) -> RefType:
        if self.accept("{"):
            var = self.ident()
            self.expect(":")
            b = self.base()
            self.expect("|")
            self.expect("box")
            self.expect("(")
            p = self.pred()
            self.expect(")")
            self.expect("}")
            return RefType(b, var, Box(p))
        return RefType(self.base())

    # ---------------- predicates
    def pred(self):
        p = self.pred_not()
        while self.accept("&&", "and", "/\\"):
            p = And(p, self.pred_not())
        return p

    def pred_not(self):
        if self.accept("not"):
            return Not(self.pred_not())
        return self.pred_atom()

    def pred_atom(self):
        if self.accept("true"):
            return PTrue()
        if self.accept("false"):
            return PFalse()
        start = self.i
        if self.at("("):
            try:
                return self.comparison()
            except ParseError:
                self.i = start
            self.expect("(")
            p = self.pred()
            self.expect(")")
            return p
        return self.comparison()

    def comparison(self):
        left = self.arith()
        if not self.at("<", "<=", ">", ">=", "="):
            if isinstance(left, RName):
                return PVar(left.name)
            raise self.error({"<", "<=", ">", ">=", "="})
        out = []
        while self.at("<", "<=", ">", ">=", "="):
            op = self.tok.text
            self.i += 1
            right = self.arith()
            a, b = to_cexpr(left, "predicate"), to_cexpr(right, "predicate")
            out.append({
                "<": lambda: Gt(b, a), "<=": lambda: Not(Gt(a, b)),
                ">": lambda: Gt(a, b), ">=": lambda: Not(Gt(b, a)), "=": lambda: Eq(a, b),
            }[op]())
            left = right
        p = out[0]
        for q in out[1:]:
            p = And(p, q)
        return p

    # ---------------- expressions
    def expr(self):
        if self.at("let"):
            self.i += 1
            rec = bool(self.accept("rec"))
            if self.at("der"):
                raise StratificationError("hybrid expression nested inside a discrete expression",
                                          path=f"line {self.tok.line}")
            name = self.ident()
            typ = self.reftype() if self.accept(":") else None
            self.expect("=")
            rhs = self.expr()
            self.expect("in")
            body = self.expr()
            return RLet(rec, name, typ, rhs, body)
        if self.accept("if"):
            cond = self.ident()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            b = self.expr()
            return RIf(cond, a, b)
        if self.accept("fby"):
            a = self.app_atom()
            b = self.app_atom()
            return RFby(a, b)
        left = self.arith()
        if self.accept("fby"):
            return RFby(left, self.expr())
        return left

    def arith(self):
        left = self.term()
        while self.at("+", "+.", "-", "-."):
            op = _ARITH[self.tok.text]
            self.i += 1
            left = RBin(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.at("*", "*.", "/", "/."):
            op = _ARITH[self.tok.text]
            self.i += 1
            left = RBin(op, left, self.unary())
        return left

    def unary(self):
        if self.accept("-", "-."):
            return RNeg(self.unary())
        return self.app()

    def _starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("num", "ident") or (t.kind in ("kw", "op") and t.text in ("(", "last", "delay", "true", "false"))

    def app(self):
        if self.tok.kind == "ident" and "__" not in self.tok.text:
            nxt = self.peek()
            if nxt.kind in ("num", "ident") or (nxt.kind in ("kw", "op") and nxt.text in ("(", "last", "delay")):
                name = self.ident()
                return RApp(name, self.app_atom())
        return self.app_atom()

    def app_atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            text = t.text
            return RNum(Fraction(text.rstrip(".") if text.endswith(".") else text), text)
        if t.kind == "ident":
            return RName(self.ident())
        if self.accept("true"):
            return RNum(True, "true")
        if self.accept("false"):
            return RNum(False, "false")
        if self.accept("last"):
            return RLast(self.ident())
        if self.accept("delay"):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return RDelay(e)
        if self.accept("("):
            items = [self.expr()]
            while self.accept(","):
                items.append(self.expr())
            self.expect(")")
            return items[0] if len(items) == 1 else RTuple(tuple(items))
        raise self.error({"number", "identifier", "(", "last", "delay"})


def parse_program(text: str) -> Program:
    """Parse a complete source text into a :class:`Program`."""
    return Parser(text).program()


def parse_expr(text: str, position: str = "continuous"):
    """Parse a lone expression; ``position`` is ``continuous`` or ``discrete``."""
    p = Parser(text)
    raw = p.expr()
    if p.tok.kind != "eof":
        raise p.error({"end of input"})
    return to_cexpr(raw) if position == "continuous" else to_dexpr(raw)


def parse_pred(text: str):
    p = Parser(text)
    out = p.pred()
    if p.tok.kind != "eof":
        raise p.error({"end of input"})
    return out
