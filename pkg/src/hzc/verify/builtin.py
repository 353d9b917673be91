"""Built-in decision procedure: linear real arithmetic by Fourier-Motzkin.

Nonlinear monomials are treated as opaque variables, strengthened by a
small axiom pack (even powers are nonnegative, and squares of a single
variable are split on the sign of their base).  A candidate
counterexample is only reported after it has been re-checked exactly
against the original formula.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

from ..errors import DivisionByZero, UnboundVariable
from ..symbolic import eval_pred
from ..syntax import And, Eq, Gt, Not, PFalse, PTrue, PVar, Var, free_vars
from . import poly as P
from .vc import VC, Invalid, Unknown, Valid

MAX_CONSTRAINTS = 20000
MAX_SIGN_SPLITS = 4


# --------------------------------------------------------------------------
# atoms: (polynomial, relation) meaning ``p rel 0`` with rel in > >= = !=


def _flatten(p, out: list):
    if isinstance(p, And):
        _flatten(p.left, out)
        _flatten(p.right, out)
    elif isinstance(p, Not) and isinstance(p.operand, Not):
        _flatten(p.operand.operand, out)
    elif not isinstance(p, PTrue):
        out.append(p)
    return out


def _atom(p, consts=None):
    """Arithmetic atom of a literal, or None when it is not arithmetic."""
    def diff(a, b):
        return P.add(P.from_cexpr(a, consts), P.from_cexpr(b, consts), -1)

    if isinstance(p, Gt):
        return diff(p.left, p.right), ">"
    if isinstance(p, Eq):
        return diff(p.left, p.right), "="
    if isinstance(p, Not) and isinstance(p.operand, Gt):
        return diff(p.operand.right, p.operand.left), ">="
    if isinstance(p, Not) and isinstance(p.operand, Eq):
        return diff(p.operand.left, p.operand.right), "!="
    return None


def _known_constants(hyps) -> dict:
    """Values of names pinned by equalities ``x = closed expression`` among the hypotheses."""
    consts: dict = {}
    changed = True
    while changed:
        changed = False
        for h in hyps:
            if not isinstance(h, Eq):
                continue
            for lhs, rhs in ((h.left, h.right), (h.right, h.left)):
                if isinstance(lhs, Var) and lhs.name not in consts and free_vars(rhs) <= set(consts):
                    try:
                        p = P.from_cexpr(rhs, consts)
                    except (P.NonPolynomial, ZeroDivisionError):
                        continue
                    if P.is_const(p):
                        consts[lhs.name] = P.const_value(p)
                        changed = True
                        break
    return consts


def _negate(atom) -> list:
    """Negation of an atom as a list of alternative atoms."""
    p, rel = atom
    if rel == ">":
        return [(P.scale(p, -1), ">=")]
    if rel == ">=":
        return [(P.scale(p, -1), ">")]
    if rel == "=":
        return [(p, ">"), (P.scale(p, -1), ">")]
    return [(p, "=")]


def _bool_literal(p):
    if isinstance(p, PVar):
        return p.name, True
    if isinstance(p, Not) and isinstance(p.operand, PVar):
        return p.operand.name, False
    return None


# --------------------------------------------------------------------------
# Fourier-Motzkin


class _Blowup(Exception):
    pass


def _norm(coeffs: dict, c: Fraction, strict: bool):
    """Scale so the largest coefficient magnitude is 1, for deduplication."""
    if coeffs:
        k = max(abs(v) for v in coeffs.values())
        coeffs = {x: v / k for x, v in coeffs.items()}
        c = c / k
    return (tuple(sorted(coeffs.items())), c, strict)


def _fm(cons: list, order: list):
    """Return the elimination stages if satisfiable, None if unsatisfiable."""
    cur = set(cons)
    stages = []
    for x in order:
        with_x = [k for k in cur if any(v == x for v, _ in k[0])]
        if not with_x:
            continue
        rest = [k for k in cur if k not in with_x]
        pos, neg = [], []
        for k in with_x:
            a = dict(k[0])[x]
            (pos if a > 0 else neg).append(k)
        stages.append((x, with_x))
        new = set(rest)
        for kp in pos:
            cp = dict(kp[0])
            ap = cp[x]
            for kn in neg:
                cn = dict(kn[0])
                an = -cn[x]
                coeffs: dict = {}
                for v, a in cp.items():
                    coeffs[v] = coeffs.get(v, 0) + a / ap
                for v, a in cn.items():
                    coeffs[v] = coeffs.get(v, 0) + a / an
                coeffs = {v: a for v, a in coeffs.items() if a and v != x}
                const = kp[1] / ap + kn[1] / an
                new.add(_norm(coeffs, const, kp[2] or kn[2]))
        if len(new) > MAX_CONSTRAINTS:
            raise _Blowup()
        cur = new
    for coeffs, c, strict in cur:
        if coeffs:
            continue
        if (strict and c <= 0) or (not strict and c < 0):
            return None
    return stages


def _pick(lo, lo_strict, hi, hi_strict, prefer=None):
    if prefer is not None:
        ok_lo = lo is None or prefer > lo or (prefer == lo and not lo_strict)
        ok_hi = hi is None or prefer < hi or (prefer == hi and not hi_strict)
        if ok_lo and ok_hi:
            return prefer
    if lo is not None and hi is not None:
        if lo < hi:
            return (lo + hi) / 2
        return lo
    if lo is not None:
        return lo + 1 if lo_strict else lo
    if hi is not None:
        return hi - 1 if hi_strict else hi
    return Fraction(0)


def _approx_sqrt(v: Fraction) -> Fraction:
    if v <= 0:
        return Fraction(0)
    n, d = v.numerator, v.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return Fraction(math.sqrt(float(v))).limit_denominator(10**12)


def _back_substitute(stages, monos: dict, values: dict):
    """Assign eliminated variables in reverse order, preferring product-consistent values."""
    for x, cons in reversed(stages):
        lo = hi = None
        lo_s = hi_s = False
        for coeffs, c, strict in cons:
            cd = dict(coeffs)
            a = cd[x]
            r = c + sum(v * values.get(y, Fraction(0)) for y, v in cd.items() if y != x)
            bound = -r / a
            if a > 0:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_s = bound, strict
            else:
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_s = bound, strict
        prefer = None
        if x in monos and all(b in values for b, _ in monos[x]):
            prefer = Fraction(1)
            for b, e in monos[x]:
                prefer *= values[b] ** e
        else:
            for mname, m in monos.items():
                if len(m) == 1 and m[0] == (x, 2) and mname in values:
                    root = _approx_sqrt(values[mname])
                    for cand in (root, -root):
                        ok_lo = lo is None or cand > lo or (cand == lo and not lo_s)
                        ok_hi = hi is None or cand < hi or (cand == hi and not hi_s)
                        if ok_lo and ok_hi:
                            prefer = cand
                            break
        values[x] = _pick(lo, lo_s, hi, hi_s, prefer)
    return values


# --------------------------------------------------------------------------


def _substitute_constants(atoms: list, subst: dict):
    """Iteratively solve single-variable linear equalities and substitute them."""
    changed = True
    while changed:
        changed = False
        for p, rel in atoms:
            if rel != "=":
                continue
            vs = P.variables(p)
            if len(vs) != 1:
                continue
            (x,) = vs
            lin = p.get(((x, 1),))
            if lin is None or any(m not in ((), ((x, 1),)) for m in p):
                continue
            subst[x] = -P.const_value(p) / lin
            atoms = [(P.substitute(q, {x: subst[x]}), r) for q, r in atoms]
            changed = True
            break
    return atoms


def _holds_const(c: Fraction, rel: str) -> bool:
    return {">": c > 0, ">=": c >= 0, "=": c == 0, "!=": c != 0}[rel]


def _case_sat(atoms: list, axioms: bool):
    """Satisfiability of a conjunction of atoms.

    Returns ``("unsat", None)``, ``("sat", model)`` with a candidate
    model, or ``("unknown", reason)``.
    """
    subst: dict = {}
    atoms = _substitute_constants(list(atoms), subst)
    live = []
    for p, rel in atoms:
        if P.is_const(p):
            if not _holds_const(P.const_value(p), rel):
                return "unsat", None
            continue
        if rel == "!=":
            continue  # dropped; only affects completeness
        live.append((p, rel))
    monos: dict = {}
    for p, _ in live:
        for m in p:
            if P.degree(m) >= 2:
                monos[P.mono_name(m)] = m
    base_cases = [[]]
    if axioms:
        ax = []
        splits = []
        for name, m in sorted(monos.items()):
            if P.is_square(m):
                if len(m) == 1 and m[0][1] == 2 and len(splits) < MAX_SIGN_SPLITS:
                    splits.append((m[0][0], name))
                else:
                    ax.append(({name: Fraction(1)}, Fraction(0), False))
        options = []
        for x, name in splits:
            options.append([
                [({x: Fraction(-1)}, Fraction(0), True), ({name: Fraction(1)}, Fraction(0), True)],
                [({x: Fraction(1)}, Fraction(0), False), ({x: Fraction(-1)}, Fraction(0), False),
                 ({name: Fraction(1)}, Fraction(0), False), ({name: Fraction(-1)}, Fraction(0), False)],
                [({x: Fraction(1)}, Fraction(0), True), ({name: Fraction(1)}, Fraction(0), True)],
            ])
        base_cases = [ax + [c for grp in combo for c in grp] for combo in product(*options)] if options else [ax]

    lin = []
    for p, rel in live:
        coeffs = {P.mono_name(m): c for m, c in p.items() if m != ()}
        c0 = P.const_value(p)
        if rel == "=":
            lin.append((coeffs, c0, False))
            lin.append(({k: -v for k, v in coeffs.items()}, -c0, False))
        else:
            lin.append((coeffs, c0, rel == ">"))
    mono_bases = {name: m for name, m in monos.items()}
    all_vars = sorted({x for c, _, _ in lin for x in c} | {x for case in base_cases for c, _, _ in case for x in c})
    nonlinear = [x for x in all_vars if x in mono_bases]
    linear = [x for x in all_vars if x not in mono_bases]
    candidate = None
    for case in base_cases:
        cons = [_norm(c, k, s) for c, k, s in lin + case]
        try:
            stages = _fm(cons, nonlinear + linear)
        except _Blowup:
            return "unknown", "elimination blow-up"
        if stages is None:
            continue
        if candidate is None:
            models = []
            for order in (nonlinear + linear, linear + nonlinear):
                st = _fm(cons, order)
                if st is not None:
                    vals = _back_substitute(st, mono_bases, {})
                    vals.update(subst)
                    models.append(vals)
            candidate = models
    if candidate is None:
        return "unsat", None
    if monos:
        candidate = candidate + _grid_models([(p, r) for p, r in live if r != "!="], mono_bases, subst)
    return "sat", (candidate, subst)


_GRID = [Fraction(v) for v in (-2, -1, Fraction(-1, 2), 0, Fraction(1, 2), 1, 2, 10)]
_SMALL_GRID = [Fraction(v) for v in (-1, 0, 1, 2)]


def _linear_constraints(atoms):
    lin = []
    for p, rel in atoms:
        coeffs = {P.mono_name(m): c for m, c in p.items() if m != ()}
        c0 = P.const_value(p)
        if rel == "=":
            lin.append(_norm(coeffs, c0, False))
            lin.append(_norm({k: -v for k, v in coeffs.items()}, -c0, False))
        else:
            lin.append(_norm(coeffs, c0, rel == ">"))
    return lin


def _grid_models(live, mono_bases, subst, wanted=4):
    """Models found by fixing the bases of nonlinear monomials on a grid and solving the rest linearly."""
    bases = sorted({b for m in mono_bases.values() for b, _ in m} - set(subst))
    if len(bases) <= 2:
        grid = _GRID
    elif len(bases) <= 4:
        grid = _SMALL_GRID
    else:
        return []
    out = []
    for combo in product(grid, repeat=len(bases)):
        fixed = dict(zip(bases, combo))
        atoms, ok = [], True
        for p, rel in live:
            q = P.substitute(p, fixed)
            if P.is_const(q):
                if not _holds_const(P.const_value(q), rel):
                    ok = False
                    break
                continue
            atoms.append((q, rel))
        if not ok:
            continue
        lin = _linear_constraints(atoms)
        order = sorted({x for c, _, _ in lin for x, _ in c})
        try:
            stages = _fm(lin, order)
        except _Blowup:
            continue
        if stages is None:
            continue
        vals = _back_substitute(stages, {}, {})
        vals.update(fixed)
        vals.update(subst)
        out.append(vals)
        if len(out) >= wanted:
            break
    return out


def _concrete_counterexample(vc: VC, goal_lit, models: list, bools: dict, consts: dict):
    names = set()
    for h in vc.hypotheses:
        names |= free_vars(h)
    names |= free_vars(vc.goal)
    for vals in models:
        env = {x: Fraction(vals.get(x, consts.get(x, 0))) for x in names}
        env.update(bools)
        try:
            if all(_truthy(eval_pred(h, env, exact=True)) for h in vc.hypotheses) and \
                    not _truthy(eval_pred(goal_lit, env, exact=True)):
                return {k: env[k] for k in sorted(names)}
        except (DivisionByZero, UnboundVariable, TypeError):
            continue
    return None


def _truthy(v) -> bool:
    return bool(v)


def solve_builtin(vc: VC, axioms: bool = True):
    """Decide ``vc``: Valid, Invalid(model) or Unknown(reason)."""
    if vc.unsupported:
        return Unknown(vc.unsupported)
    hyps = []
    for h in vc.hypotheses:
        _flatten(h, hyps)
    consts = _known_constants(hyps)
    if any(isinstance(h, PFalse) for h in hyps):
        return Valid()
    atoms, bools, dropped = [], {}, False
    for h in hyps:
        b = _bool_literal(h)
        if b is not None:
            if bools.get(b[0], b[1]) != b[1]:
                return Valid()
            bools[b[0]] = b[1]
            continue
        try:
            a = _atom(h, consts)
        except (P.NonPolynomial, ZeroDivisionError):
            a = None
        if a is None:
            dropped = True
            continue
        atoms.append(a)
    goals = _flatten(vc.goal, [])
    if any(isinstance(g, PFalse) for g in goals):
        goals = [PFalse()]
    unknown = None
    for g in goals:
        res = _prove_literal(vc, g, atoms, bools, axioms, consts)
        if isinstance(res, Invalid):
            return res
        if isinstance(res, Unknown) and unknown is None:
            unknown = res
    if unknown is not None:
        if dropped:
            return Unknown(unknown.reason + "; some hypotheses were outside the supported fragment")
        return unknown
    return Valid()


def _prove_literal(vc: VC, g, atoms, bools, axioms, consts):
    if isinstance(g, PFalse):
        status, info = _case_sat(atoms, axioms)
        if status == "unsat":
            return Valid()
        if status == "unknown":
            return Unknown(info)
        cex = _concrete_counterexample(vc, PFalse(), info[0], _complete_bools(vc, bools, None), consts)
        return Invalid(cex) if cex is not None else Unknown("candidate counterexample did not re-check")
    b = _bool_literal(g)
    if b is not None:
        if bools.get(b[0]) == b[1]:
            return Valid()
        status, info = _case_sat(atoms, axioms)
        if status == "unsat":
            return Valid()
        if status == "unknown":
            return Unknown(info)
        forced = dict(bools)
        forced[b[0]] = not b[1]
        cex = _concrete_counterexample(vc, g, info[0], _complete_bools(vc, forced, None), consts)
        return Invalid(cex) if cex is not None else Unknown("candidate counterexample did not re-check")
    try:
        a = _atom(g, consts)
    except (P.NonPolynomial, ZeroDivisionError) as exc:
        return Unknown(f"goal is not polynomial: {exc}")
    if a is None:
        return Unknown(f"goal shape not supported: {g!r}")
    for neg in _negate(a):
        status, info = _case_sat(atoms + [neg], axioms)
        if status == "unsat":
            continue
        if status == "unknown":
            return Unknown(info)
        cex = _concrete_counterexample(vc, g, info[0], _complete_bools(vc, bools, None), consts)
        if cex is not None:
            return Invalid(cex)
        return Unknown("nonlinear counterexample candidate could not be confirmed")
    return Valid()


def _complete_bools(vc: VC, bools: dict, _unused):
    out = dict(bools)
    for h in list(vc.hypotheses) + [vc.goal]:
        for name in _pvars(h):
            out.setdefault(name, True)
    return out


def _pvars(p) -> set:
    if isinstance(p, PVar):
        return {p.name}
    if isinstance(p, And):
        return _pvars(p.left) | _pvars(p.right)
    if isinstance(p, Not):
        return _pvars(p.operand)
    return set()
