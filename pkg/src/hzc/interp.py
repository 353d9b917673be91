"""Stream executor: discrete stepping, hybrid segments, traces and trace checks."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ResetArityMismatch, UnboundVariable, Unsupported
from .flow import Crossed, SolverConfig, integrate
from .symbolic import eval_cexpr
from .syntax import (
    And, App, Const, Delay, DTuple, Embed, Eq, Fby, FunDef, Gt, HExpr, If,
    Let, LetRec, Not, PFalse, PTrue, PVar, Program, Reset, Tuple, Var,
)

RUNNING = "Running"
INFINITE = "Infinite"
ZENO = "ZenoSuspected"
ZENO_WINDOW = 10


@dataclass(frozen=True)
class Env:
    """Function definitions ``S`` and stream environment ``sigma`` (histories, newest first)."""

    functions: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)

    def bind(self, name: str, value) -> "Env":
        sigma = dict(self.sigma)
        sigma[name] = (value,) + tuple(self.sigma.get(name, ()))
        return Env(self.functions, sigma)

    def current(self) -> dict:
        return {k: h[0] for k, h in self.sigma.items() if h}


@dataclass(frozen=True)
class DStepResult:
    value: object
    expr: object


def _const_value(c: Const):
    return c.value if isinstance(c.value, bool) else float(c.value)


def literal(value):
    """Constant expression denoting ``value`` (a scalar or a tuple of scalars)."""
    if isinstance(value, tuple):
        return Embed(Tuple(tuple(Const(v) for v in value)))
    return Const(value)


def dstep(de, env: Env) -> DStepResult:
    if isinstance(de, Const):
        return DStepResult(_const_value(de), de)
    if isinstance(de, Var):
        h = env.sigma.get(de.name)
        if not h:
            raise UnboundVariable(de.name)
        return DStepResult(h[0], de)
    if isinstance(de, Embed):
        cur = env.current()
        return DStepResult(eval_cexpr(de.expr, cur, last=cur), de)
    if isinstance(de, DTuple):
        res = [dstep(i, env) for i in de.items]
        return DStepResult(tuple(r.value for r in res), DTuple(tuple(r.expr for r in res)))
    if isinstance(de, Fby):
        first = dstep(de.first, env)
        rest = dstep(de.rest, env)
        return DStepResult(first.value, Fby(literal(rest.value), rest.expr))
    if isinstance(de, LetRec):
        if not isinstance(de.rhs, Fby):
            raise Unsupported(f"recursive definition of {de.name!r} is not guarded by fby")
        head = dstep(de.rhs.first, env)
        inner = env.bind(de.name, head.value)
        rest = dstep(de.rhs.rest, inner)
        body = dstep(de.body, inner)
        rhs = Fby(literal(rest.value), rest.expr)
        return DStepResult(body.value, LetRec(de.name, de.type, rhs, body.expr))
    if isinstance(de, Let):
        rhs = dstep(de.rhs, env)
        body = dstep(de.body, env.bind(de.name, rhs.value))
        return DStepResult(body.value, Let(de.name, de.type, rhs.expr, body.expr))
    if isinstance(de, If):
        h = env.sigma.get(de.cond)
        if not h:
            raise UnboundVariable(de.cond)
        a = dstep(de.then, env)
        b = dstep(de.orelse, env)
        return DStepResult(a.value if h[0] else b.value, If(de.cond, a.expr, b.expr))
    if isinstance(de, (App, Delay)):
        raise Unsupported(f"{type(de).__name__} is outside the executable fragment")
    # a bare continuous expression in discrete position
    cur = env.current()
    return DStepResult(eval_cexpr(de, cur, last=cur), de)


# --------------------------------------------------------------------------
# hybrid segments


@dataclass(frozen=True)
class ResetEvent:
    j: int
    pre_state: tuple
    post_value: tuple


@dataclass
class Segment:
    index: int
    global_start: float
    duration: float
    times: np.ndarray
    states: np.ndarray
    body_values: np.ndarray
    reset: ResetEvent | None = None
    stats: object = None

    @property
    def global_end(self) -> float:
        return self.global_start + self.duration


class InfiniteResidual:
    """Terminal form of a hybrid expression whose flow never resets."""

    def __repr__(self) -> str:
        return "[inf]"


INFINITE_RESIDUAL = InfiniteResidual()


def _as_tuple(v) -> tuple:
    return tuple(v) if isinstance(v, tuple) else (v,)


def global_values(prog: Program) -> Env:
    env = Env()
    functions = {}
    for g in prog.globals:
        if isinstance(g, FunDef):
            functions[g.name] = g
            continue
        env = env.bind(g.name, dstep(g.rhs, env).value)
    return Env(functions, env.sigma)


def _body_values(h: HExpr, flow_res, genv: dict) -> np.ndarray:
    env = dict(genv)
    for i, x in enumerate(h.binder):
        env[x] = flow_res.states[:, i]
    val = eval_cexpr(h.body, env, last=env)
    if isinstance(val, tuple):
        return np.column_stack([np.broadcast_to(np.asarray(v, float), flow_res.times.shape) for v in val])
    return np.broadcast_to(np.asarray(val, float), flow_res.times.shape).reshape(-1, 1)


def hstep(h: HExpr, env: Env, cfg: SolverConfig, flow=integrate, index: int = 0, global_start: float = 0.0):
    """One continuous segment and the residual expression after its reset."""
    v0 = _as_tuple(dstep(h.init, env).value)
    if len(v0) != h.arity:
        raise ResetArityMismatch(f"initial value of arity {len(v0)} for {h.arity} state variables")
    d = dict(zip(h.binder, h.deriv_items))
    genv = {k: v for k, v in env.current().items() if not isinstance(v, bool) and k not in h.binder}
    res = flow(d, v0, list(h.guards), genv, cfg)
    body = _body_values(h, res, genv)
    out = res.outcome
    if not isinstance(out, Crossed):
        seg = Segment(index, global_start, res.t_end, res.times, res.states, body, None, res.stats)
        return seg, INFINITE_RESIDUAL
    benv = env
    for x, v in zip(h.binder, out.state):
        benv = benv.bind(x, v)
    branch = h.resets[out.j - 1]
    step = dstep(branch.branch, benv)
    vr = tuple(float(v) for v in _as_tuple(step.value))
    if len(vr) != h.arity:
        raise ResetArityMismatch(f"reset {out.j} produced {len(vr)} values for {h.arity} state variables")
    resets = list(h.resets)
    resets[out.j - 1] = Reset(branch.guard, step.expr, branch.invariant)
    init = literal(vr if h.arity > 1 else vr[0])
    residual = replace(h, init=init, resets=tuple(resets))
    seg = Segment(index, global_start, out.t_r, res.times, res.states, body,
                  ResetEvent(out.j, out.state, vr), res.stats)
    return seg, residual


@dataclass
class Trace:
    binder: tuple
    globals: dict
    segments: list
    marker: str

    @property
    def resets(self) -> list:
        return [s.reset for s in self.segments if s.reset is not None]

    @property
    def event_times(self) -> list:
        return [s.global_end for s in self.segments if s.reset is not None]

    @property
    def duration(self) -> float:
        return self.segments[-1].global_end if self.segments else 0.0


def _decimate(seg: Segment, keep_every: int) -> Segment:
    n = len(seg.times)
    idx = np.unique(np.concatenate([np.arange(0, n, keep_every), [n - 1]]))
    return replace(seg, times=seg.times[idx], states=seg.states[idx], body_values=seg.body_values[idx])


def run(prog: Program, cfg: SolverConfig = SolverConfig(), max_segments: int = 1000,
        max_global_time: float = 1000.0, flow=integrate, decimate: int | None = None) -> Trace:
    """Alternate continuous segments and resets until a stop condition holds."""
    if max_segments < 1 or not max_global_time > 0:
        raise ValueError("run bounds must be positive")
    env = global_values(prog)
    genv = {k: v for k, v in env.current().items()}
    h = prog.main
    segments = []
    marker = RUNNING
    t_global = 0.0
    short = substep = 0
    while len(segments) < max_segments:
        remaining = max_global_time - t_global
        if remaining <= 0:
            break
        seg_cfg = cfg if remaining >= cfg.t_max else replace(cfg, t_max=remaining)
        seg, residual = hstep(h, env, seg_cfg, flow, len(segments), t_global)
        if decimate and decimate > 1:
            seg = _decimate(seg, decimate)
        segments.append(seg)
        t_global = seg.global_end
        if residual is INFINITE_RESIDUAL:
            marker = INFINITE if seg_cfg is cfg else RUNNING
            if substep >= ZENO_WINDOW:
                # resets were accumulating below the step size; the missing crossing is not trustworthy
                marker = ZENO
            break
        h = residual
        substep = substep + 1 if seg.duration < cfg.h else 0
        short = short + 1 if seg.duration < cfg.tol_t else 0
        if short >= ZENO_WINDOW:
            marker = ZENO
            break
    return Trace(prog.main.binder, genv, segments, marker)


# --------------------------------------------------------------------------
# trace checking


def _lenient(p, env: dict, tol: float, positive: bool = True):
    """Truth of ``p`` with each atom relaxed by ``tol`` in the direction that helps ``p`` hold."""
    if isinstance(p, PTrue):
        return True
    if isinstance(p, PFalse):
        return False
    if isinstance(p, PVar):
        return env[p.name]
    if isinstance(p, Gt):
        diff = eval_cexpr(p.left, env) - eval_cexpr(p.right, env)
        return diff > -tol if positive else diff > tol
    if isinstance(p, Eq):
        diff = eval_cexpr(p.left, env) - eval_cexpr(p.right, env)
        return np.abs(diff) <= tol if positive else diff == 0
    if isinstance(p, And):
        return np.logical_and(_lenient(p.left, env, tol, positive), _lenient(p.right, env, tol, positive))
    if isinstance(p, Not):
        return np.logical_not(_lenient(p.operand, env, tol, not positive))
    raise TypeError(f"not a predicate: {p!r}")


@dataclass(frozen=True)
class TraceCheck:
    holds: bool
    first_violation: tuple | None = None  # (global time, state)


def check_trace(tr: Trace, phi, tol: float = 1e-6) -> TraceCheck:
    """Check ``phi`` (a state predicate or its box) at every sample and every post-reset value."""
    pred = getattr(phi, "pred", phi)
    for seg in tr.segments:
        env = dict(tr.globals)
        for i, x in enumerate(tr.binder):
            env[x] = seg.states[:, i]
        ok = np.broadcast_to(np.asarray(_lenient(pred, env, tol), dtype=bool), seg.times.shape)
        if not ok.all():
            k = int(np.argmin(ok))
            state = {x: float(seg.states[k, i]) for i, x in enumerate(tr.binder)}
            return TraceCheck(False, (seg.global_start + float(seg.times[k]), state))
        if seg.reset is not None:
            env = dict(tr.globals)
            env.update(zip(tr.binder, seg.reset.post_value))
            if not bool(_lenient(pred, env, tol)):
                return TraceCheck(False, (seg.global_end, dict(zip(tr.binder, seg.reset.post_value))))
    return TraceCheck(True)


# --------------------------------------------------------------------------
# serialization


def trace_rows(tr: Trace):
    for seg in tr.segments:
        last = len(seg.times) - 1
        for k in range(len(seg.times)):
            event = seg.reset is not None and k == last
            yield ([seg.global_start + float(seg.times[k]), seg.index]
                   + [float(v) for v in seg.states[k]]
                   + [1 if event else 0, seg.reset.j if event else ""])


def to_csv(tr: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["global_time", "segment_index", *tr.binder, "is_event", "guard_index"])
    for row in trace_rows(tr):
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def read_csv(text: str) -> dict:
    """Parse a trace CSV back into columns (used for round-trip checks)."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    cols = {h: [] for h in header}
    for r in body:
        for h, v in zip(header, r):
            cols[h].append(v)
    out = {}
    for h, vals in cols.items():
        if h == "guard_index":
            out[h] = [int(v) if v else None for v in vals]
        elif h in ("segment_index", "is_event"):
            out[h] = [int(v) for v in vals]
        else:
            out[h] = [float(v) for v in vals]
    return out
