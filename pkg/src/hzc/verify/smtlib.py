"""SMT-LIB emission and an external solver driven over a pipe."""

from __future__ import annotations

import shlex
import shutil
import subprocess
from fractions import Fraction

from ..errors import SolverProtocolError, SolverUnavailable
from ..syntax import And, BinOp, Const, Eq, Gt, Neg, Not, PFalse, PTrue, PVar, Var
from .vc import VC, Invalid, Unknown

DEFAULT_CMD = "z3 -in"
DEFAULT_TIMEOUT = 10.0


def _num(v) -> str:
    f = Fraction(v)
    n, d = f.numerator, f.denominator
    body = f"{abs(n)}.0" if d == 1 else f"(/ {abs(n)}.0 {d}.0)"
    return f"(- {body})" if n < 0 else body


def term(e) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return _num(e.value)
    if isinstance(e, Var):
        return _sym(e.name)
    if isinstance(e, Neg):
        return f"(- {term(e.operand)})"
    if isinstance(e, BinOp):
        return f"({e.op} {term(e.left)} {term(e.right)})"
    raise TypeError(f"cannot emit {e!r}")


def formula(p) -> str:
    if isinstance(p, PTrue):
        return "true"
    if isinstance(p, PFalse):
        return "false"
    if isinstance(p, PVar):
        return _sym(p.name)
    if isinstance(p, Eq):
        return f"(= {term(p.left)} {term(p.right)})"
    if isinstance(p, Gt):
        return f"(> {term(p.left)} {term(p.right)})"
    if isinstance(p, Not):
        if isinstance(p.operand, Gt):
            g = p.operand
            return f"(<= {term(g.left)} {term(g.right)})"
        return f"(not {formula(p.operand)})"
    if isinstance(p, And):
        return f"(and {formula(p.left)} {formula(p.right)})"
    raise TypeError(f"cannot emit {p!r}")


def _sym(name: str) -> str:
    return name if name.replace("_", "a").isalnum() else f"|{name}|"


def _symbols(p, reals: set, bools: set):
    if isinstance(p, Var):
        reals.add(p.name)
    elif isinstance(p, PVar):
        bools.add(p.name)
    elif isinstance(p, (BinOp, Eq, Gt, And)):
        _symbols(p.left, reals, bools)
        _symbols(p.right, reals, bools)
    elif isinstance(p, (Neg, Not)):
        _symbols(p.operand, reals, bools)


def emit(vc: VC, with_model: bool = True) -> str:
    """Script asserting the hypotheses and the negated goal; deterministic output."""
    reals, bools = set(), set()
    for h in vc.hypotheses:
        _symbols(h, reals, bools)
    _symbols(vc.goal, reals, bools)
    lines = [f"; {vc.provenance} {vc.path}".rstrip(), "(set-logic QF_NRA)"]
    for name in sorted(reals):
        lines.append(f"(declare-fun {_sym(name)} () Real)")
    for name in sorted(bools):
        lines.append(f"(declare-fun {_sym(name)} () Bool)")
    for h in vc.hypotheses:
        if not isinstance(h, PTrue):
            lines.append(f"(assert {formula(h)})")
    lines.append(f"(assert (not {formula(vc.goal)}))")
    lines.append("(check-sat)")
    if with_model:
        lines.append("(get-model)")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# reading answers


def _tokens(text: str):
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c in "()":
            out.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            out.append(text[i + 1:j])
            i = j + 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def parse_sexprs(text: str) -> list:
    toks = _tokens(text)
    pos = 0

    def one():
        nonlocal pos
        t = toks[pos]
        pos += 1
        if t == "(":
            items = []
            while toks[pos] != ")":
                items.append(one())
            pos += 1
            return items
        if t == ")":
            raise SolverProtocolError("unbalanced parenthesis in solver output")
        return t

    out = []
    try:
        while pos < len(toks):
            out.append(one())
    except IndexError:
        raise SolverProtocolError("truncated solver output") from None
    return out


def _value(sx):
    if isinstance(sx, str):
        if sx == "true":
            return True
        if sx == "false":
            return False
        return Fraction(sx)
    head = sx[0]
    if head == "-" and len(sx) == 2:
        return -_value(sx[1])
    if head == "/" and len(sx) == 3:
        return _value(sx[1]) / _value(sx[2])
    raise SolverProtocolError(f"unsupported model value {sx!r}")


def parse_model(sx) -> dict:
    items = sx[1:] if sx and sx[0] == "model" else sx
    model = {}
    for d in items:
        if isinstance(d, list) and d and d[0] == "define-fun" and len(d) == 5 and d[2] == []:
            try:
                model[d[1]] = _value(d[4])
            except (ValueError, ZeroDivisionError, SolverProtocolError):
                continue
    return model


def solve_external(vc: VC, solver_cmd: str = DEFAULT_CMD, timeout: float = DEFAULT_TIMEOUT):
    """Discharge ``vc`` with an external solver reading a script on standard input."""
    from .vc import Valid

    if vc.unsupported:
        return Unknown(vc.unsupported)
    argv = shlex.split(solver_cmd)
    if not argv or shutil.which(argv[0]) is None:
        raise SolverUnavailable(f"solver command not found: {solver_cmd!r}")
    try:
        proc = subprocess.run(argv, input=emit(vc), capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return Unknown(f"solver timed out after {timeout:g}s")
    except OSError as exc:
        raise SolverUnavailable(str(exc)) from None
    sx = parse_sexprs(proc.stdout)
    if not sx:
        raise SolverProtocolError(f"no answer from solver (stderr: {proc.stderr.strip()[:200]})")
    answer = sx[0]
    if answer == "unsat":
        return Valid()
    if answer == "sat":
        model = parse_model(sx[1]) if len(sx) > 1 and isinstance(sx[1], list) else {}
        return Invalid(model)
    if answer in ("unknown", "timeout"):
        return Unknown(f"solver answered {answer}")
    if isinstance(answer, list) and answer and answer[0] == "error":
        raise SolverProtocolError(f"solver error: {' '.join(map(str, answer[1:]))}")
    raise SolverProtocolError(f"unexpected solver answer {answer!r}")
