"""Verification-condition generation for a checked program."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from ..errors import DivisionByZero, Unsupported, UnsupportedPredicateShape
from ..symbolic import ZERO, active, eval_cexpr, lie_expr, lie_pred, simplify
from ..syntax import (
    App, Const, Delay, DTuple, Embed, Eq, Fby, FunDef, GlobalDef, If, Let, LetRec, Not, PTrue, PVar,
    Tuple, Var, conj, free_vars, ge, le, lt, substitute, tuple_items,
)
from .vc import VC, Valid


@dataclass
class VCSet:
    vcs: list
    active_checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.vcs)

    def __len__(self):
        return len(self.vcs)


def _default_entails(hyps, goal) -> bool:
    from .builtin import solve_builtin

    return isinstance(solve_builtin(VC(tuple(hyps), goal, "ActiveCheck")), Valid)


def _pre(name: str) -> str:
    return f"{name}__pre"


def _as_cexpr(rhs):
    while isinstance(rhs, Embed):
        rhs = rhs.expr
    return rhs


class _Gen:
    def __init__(self, prog, entails):
        self.prog = prog
        self.h = prog.main
        self.entails = entails
        self.out = VCSet([])
        self.fresh = 0
        self.G = []
        self.gvals: dict = {}
        for g in prog.globals:
            if isinstance(g, FunDef):
                continue
            rhs = _as_cexpr(g.rhs)
            if g.type is not None:
                goal = substitute(g.type.pred, {g.type.var: rhs})
                self._emit(self.G, goal, "DiscreteSubtype(global)", f"global.{g.name}")
            self.G.append(Eq(Var(g.name), rhs))
            try:
                self.gvals[g.name] = eval_cexpr(rhs, self.gvals, exact=True)
            except (DivisionByZero, KeyError, TypeError):
                pass
        self.binder = self.h.binder
        self.d = dict(zip(self.binder, self.h.deriv_items))
        self.phi = self.h.safety

    # ---------------------------------------------------------------- helpers

    def _emit(self, hyps, goal, provenance, path, **kw):
        vc = VC(tuple(hyps), goal, provenance, path, **kw)
        self.out.vcs.append(vc)
        return vc

    def _at(self, p, values):
        return substitute(p, dict(zip(self.binder, values)))

    def _lie_at(self, u, values):
        return simplify(substitute(lie_expr(u, self.d), dict(zip(self.binder, values))))

    # ------------------------------------------------------ discrete evaluation

    def alts(self, de, env: dict, ctx: list, path: str):
        """Alternatives ``(hyps, values)`` a discrete expression may produce first."""
        last = {x: Var(_pre(x)) for x in self.binder}
        if isinstance(de, Embed):
            e = substitute(de.expr, env, last)
            return [([], tuple_items(e))]
        if not isinstance(de, (DTuple, Let, LetRec, Fby, If, App, Delay)):
            e = substitute(de, env, last)
            return [([], tuple_items(e))]
        if isinstance(de, DTuple):
            parts = [self.alts(it, env, ctx, f"{path}.{k}") for k, it in enumerate(de.items)]
            res = []
            for combo in product(*parts):
                hyps, vals = [], ()
                for hs, vs in combo:
                    hyps += hs
                    vals += vs
                res.append((hyps, vals))
            return res
        if isinstance(de, Let):
            res = []
            for hs, vs in self.alts(de.rhs, env, ctx, f"{path}.{de.name}"):
                if len(vs) != 1:
                    raise Unsupported(f"tuple-valued let binding '{de.name}'", path)
                if de.type is not None:
                    goal = substitute(de.type.pred, {de.type.var: vs[0]})
                    self._emit(ctx + hs, goal, "DiscreteSubtype", f"{path}.let {de.name}")
                inner = dict(env)
                inner[de.name] = vs[0]
                for hs2, vs2 in self.alts(de.body, inner, ctx + hs, path):
                    res.append((hs + hs2, vs2))
            return res
        if isinstance(de, LetRec):
            self.fresh += 1
            sym = Var(f"{de.name}__r{self.fresh}")
            tau = substitute(de.type.pred, {de.type.var: sym}) if de.type is not None else PTrue()
            inner = dict(env)
            inner[de.name] = sym
            rhs = de.rhs
            if isinstance(rhs, Fby) and de.type is not None:
                for hs, vs in self.alts(rhs.first, env, ctx, f"{path}.{de.name}.head"):
                    goal = substitute(de.type.pred, {de.type.var: vs[0]})
                    self._emit(ctx + hs, goal, "DiscreteSubtype", f"{path}.rec {de.name}.head")
                for hs, vs in self.alts(rhs.rest, inner, ctx + [tau], f"{path}.{de.name}.tail"):
                    goal = substitute(de.type.pred, {de.type.var: vs[0]})
                    self._emit(ctx + [tau] + hs, goal, "DiscreteSubtype", f"{path}.rec {de.name}.tail")
            hyps = [tau] if not isinstance(tau, PTrue) else []
            return [(hyps + hs, vs) for hs, vs in self.alts(de.body, inner, ctx + hyps, path)]
        if isinstance(de, Fby):
            return self.alts(de.first, env, ctx, path) + self.alts(de.rest, env, ctx, path)
        if isinstance(de, If):
            c = PVar(de.cond)
            yes = [([c] + hs, vs) for hs, vs in self.alts(de.then, env, ctx + [c], path + ".then")]
            no = [([Not(c)] + hs, vs) for hs, vs in self.alts(de.orelse, env, ctx + [Not(c)], path + ".else")]
            return yes + no
        raise Unsupported(f"{type(de).__name__} is outside the verified fragment", path)

    # --------------------------------------------------------- segment premises

    def frozen(self, values):
        """Equalities for state components whose derivative is identically zero."""
        known: dict = {}
        consts = {k: Const(v) for k, v in self.gvals.items()}
        changed = True
        while changed:
            changed = False
            for x, val in zip(self.binder, values):
                if x in known:
                    continue
                rhs = simplify(substitute(self.d[x], {**consts, **known}))
                if isinstance(rhs, Const) and rhs.value == 0:
                    known[x] = val
                    changed = True
        return [Eq(Var(x), known[x]) for x in self.binder if x in known]

    def active_facts(self, values, ctx, where):
        closed = all(free_vars(v) <= set(self.gvals) for v in values)
        guards = self.h.guards
        if closed:
            try:
                num = tuple(eval_cexpr(v, self.gvals, exact=True) for v in values)
                facts = active(num, guards, self.d, self.gvals, self.binder)
                return [le(guards[i - 1], ZERO) for i in facts.indices]
            except DivisionByZero:
                pass
        out = []
        for k, u in enumerate(guards, start=1):
            uv = simplify(substitute(u, dict(zip(self.binder, values))))
            goal1 = lt(uv, ZERO)
            ok = self.entails(ctx, goal1)
            self.out.active_checks.append((VC(tuple(ctx), goal1, f"ActiveCheck({where}, guard {k})"), ok))
            if not ok:
                goal2 = conj([Eq(uv, ZERO), lt(self._lie_at(u, values), ZERO)])
                ok = self.entails(ctx, goal2)
                self.out.active_checks.append((VC(tuple(ctx), goal2, f"ActiveCheck({where}, guard {k})"), ok))
            if ok:
                out.append(le(u, ZERO))
        return out

    def segment(self, ctx, values, inv, inv_given, label, path):
        suffix = "" if label is None else f"({label})"
        frozen = self.frozen(values)
        facts = self.active_facts(values, ctx, label or "init")
        hyps = ctx + frozen + facts
        try:
            goal = lie_pred(inv, self.d)
            self._emit(hyps, goal, f"DiffSideCondition{suffix}", path)
        except UnsupportedPredicateShape as exc:
            self._emit(hyps, inv, f"DiffSideCondition{suffix}", path, unsupported=str(exc))
        self._emit(ctx + frozen + [inv] + facts, self.phi, f"Bridge{suffix}", path,
                   default_invariant=not inv_given)

    def run(self):
        h = self.h
        base = list(self.G)
        inv0 = h.init_invariant if h.init_invariant is not None else PTrue()
        init_alts = self.alts(h.init, {}, base, "main.init")
        for k, (hs, vals) in enumerate(init_alts):
            path = "main.init" if len(init_alts) == 1 else f"main.init[{k + 1}]"
            ctx = base + hs
            self._emit(ctx, self._at(self.phi, vals), "InitSafety", path)
            self._emit(ctx, self._at(inv0, vals), "InitInvariant", path)
            self.segment(ctx, vals, inv0, h.init_invariant is not None, None, path)
        pre = {x: Var(_pre(x)) for x in self.binder}
        for i, r in enumerate(h.resets, start=1):
            path = f"main.reset[{i}]"
            u_pre = substitute(r.guard, pre)
            P_i = [substitute(self.phi, pre), Eq(u_pre, ZERO), ge(self._lie_at(r.guard, tuple(pre.values())), ZERO)]
            inv = r.invariant if r.invariant is not None else PTrue()
            branch_alts = self.alts(r.branch, {}, base + P_i, f"{path}.branch")
            for k, (hs, vals) in enumerate(branch_alts):
                p = path if len(branch_alts) == 1 else f"{path}[{k + 1}]"
                ctx = base + P_i + hs
                self._emit(ctx, self._at(self.phi, vals), f"ResetSafety({i})", p)
                self._emit(ctx, self._at(inv, vals), f"ResetInvariant({i})", p)
                self.segment(ctx, vals, inv, r.invariant is not None, f"reset {i}", p)
        if h.body_type is None:
            goal = PTrue()
        else:
            body = substitute(h.body, {}, {x: Var(x) for x in self.binder})
            items = tuple_items(body)
            goal = substitute(h.body_type.pred, {h.body_type.var: items[0]}) if len(items) == 1 \
                else h.body_type.pred
        self._emit(base + [self.phi], goal, "BodySubtype", "main.body")
        return self.out


def gen_vcs(prog, entails=None) -> VCSet:
    """All verification conditions of ``prog`` in source order."""
    return _Gen(prog, entails or _default_entails).run()
