"""Command-line front end: ``hzc check | simulate | vcs | taxonomy``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import HzcError, SolverProtocolError, SolverUnavailable
from .flow import SolverConfig
from .interp import INFINITE, ZENO, check_trace, run, to_csv, trace_rows
from .parser import parse_program
from .printer import pretty_pred
from .wellformed import check_wellformed

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_VIOLATION = 1
EXIT_UNKNOWN = 2
EXIT_INPUT = 3
EXIT_ZENO = 4
EXIT_RUNTIME = 5

SCHEMA = 1


class InputError(Exception):
    pass


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not a text file") from None
    try:
        prog = parse_program(text)
        check_wellformed(prog)
    except HzcError as exc:
        raise InputError(f"{path}: {exc}") from None
    except RecursionError:
        raise InputError(f"{path}: program nested too deeply") from None
    return prog


def _solver_config(args) -> SolverConfig:
    try:
        return SolverConfig(h=args.dt, t_max=args.horizon, tol_t=args.tol_t, tol_v=args.tol_v)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _fmt(v) -> str:
    return f"{float(v):.10g}"


# --------------------------------------------------------------------------


def cmd_check(args) -> int:
    from .verify import check_program
    from .verify.vc import Invalid, Unknown

    prog = _load(args.input)
    try:
        verdict = check_program(prog, policy=args.solver, solver_cmd=args.solver_cmd)
    except (SolverUnavailable, SolverProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    if args.format == "json":
        items = []
        for r in verdict.results:
            d = {"provenance": r.vc.provenance, "path": r.vc.path, "status": r.result.status,
                 "backend": r.backend, "formula": r.vc.formula()}
            if isinstance(r.result, Invalid):
                d["counterexample"] = {k: str(v) for k, v in sorted(r.result.model.items())}
            if isinstance(r.result, Unknown):
                d["reason"] = r.result.reason
            items.append(d)
        doc = {"schema": SCHEMA, "verdict": verdict.overall, "vcs": items, "warnings": verdict.warnings}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(verdict.report() + "\n", args.out)
    return {"Accept": EXIT_OK, "Reject": EXIT_REJECT}.get(verdict.overall, EXIT_UNKNOWN)


def _summary(tr, check) -> list:
    lines = []
    for seg in tr.segments:
        if seg.reset is not None:
            r = seg.reset
            lines.append(f"segment {seg.index}: t_r={_fmt(seg.global_end)} guard={r.j} "
                         f"reset=({', '.join(_fmt(v) for v in r.post_value)})")
        else:
            final = ", ".join(f"{x}={_fmt(v)}" for x, v in zip(tr.binder, seg.states[-1]))
            lines.append(f"segment {seg.index}: no crossing up to t={_fmt(seg.global_end)} ({final})")
    if check is not None:
        if check.holds:
            lines.append("invariant holds on the trace")
        else:
            t, state = check.first_violation
            st = ", ".join(f"{k}={_fmt(v)}" for k, v in state.items())
            lines.append(f"invariant violated at t={_fmt(t)} ({st})")
    if tr.marker == INFINITE:
        lines.append("infinite segment reached")
    elif tr.marker == ZENO:
        lines.append("stopped: Zeno behaviour suspected")
    else:
        lines.append(f"stopped: run bounds reached at t={_fmt(tr.duration)}")
    return lines


def cmd_simulate(args) -> int:
    prog = _load(args.input)
    cfg = _solver_config(args)
    if args.max_segments < 1 or not args.max_time > 0:
        raise InputError("run bounds must be positive")
    try:
        tr = run(prog, cfg, max_segments=args.max_segments, max_global_time=args.max_time)
    except HzcError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    check = check_trace(tr, prog.main.safety) if prog.main.state_type is not None else None
    summary = _summary(tr, check)
    if args.format == "json":
        doc = {
            "schema": SCHEMA,
            "columns": ["global_time", "segment_index", *tr.binder, "is_event", "guard_index"],
            "rows": [list(r) for r in trace_rows(tr)],
            "marker": tr.marker,
            "events": [{"time": s.global_end, "guard": s.reset.j, "post": list(s.reset.post_value)}
                       for s in tr.segments if s.reset is not None],
            "invariant_holds": None if check is None else check.holds,
            "summary": summary,
        }
        payload = json.dumps(doc, indent=1) + "\n"
    else:
        payload = to_csv(tr)
    if args.out is None:
        sys.stdout.write(payload)
        print("\n".join(summary), file=sys.stderr)
    else:
        _emit(payload, args.out)
        print("\n".join(summary))
    if check is not None and not check.holds:
        return EXIT_VIOLATION
    if tr.marker == ZENO:
        return EXIT_ZENO
    return EXIT_OK


def cmd_vcs(args) -> int:
    from .verify import gen_vcs, solve_builtin
    from .verify.smtlib import emit
    from .verify.vc import Valid

    prog = _load(args.input)
    vcs = gen_vcs(prog)
    warnings = list(vcs.warnings)
    for vc in vcs:
        if vc.default_invariant and vc.provenance.startswith("Bridge") and \
                not isinstance(solve_builtin(vc), Valid):
            warnings.append(f"MissingAnnotation: {vc.path} may need an invariant annotation")
    if args.format == "json":
        doc = {"schema": SCHEMA, "warnings": warnings, "vcs": [
            {"index": k, "provenance": vc.provenance, "path": vc.path,
             "hypotheses": [pretty_pred(h) for h in vc.hypotheses], "goal": pretty_pred(vc.goal),
             "smtlib": emit(vc)}
            for k, vc in enumerate(vcs, start=1)]}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK
    parts = []
    for k, vc in enumerate(vcs, start=1):
        parts.append(f"VC {k}: {vc.provenance} [{vc.path}]\n  {vc.formula()}\n{emit(vc)}")
    parts.extend(f"warning: {w}\n" for w in warnings)
    _emit("\n".join(parts), args.out)
    return EXIT_OK


def cmd_taxonomy(args) -> int:
    from .taxonomy import render_grid, run_harness

    rows = run_harness()
    bad = [r for r in rows if not r.matches]
    lines = [render_grid(rows, "strict"), "", render_grid(rows, "loose"), ""]
    for r in bad:
        lines.append(f"mismatch: {r.case.label} classified as {r.classified.label}")
    lines.append(f"{len(rows) - len(bad)}/{len(rows)} cases classified as encoded")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if not bad else EXIT_REJECT


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hzc", description="Hybrid stream programs: check, simulate, inspect.")
    sub = p.add_subparsers(dest="command", required=True)
    d = SolverConfig()

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("input", help="program file")
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--format", choices=("text", "csv", "json"), default=None)

    sp = sub.add_parser("check", help="verify a program")
    common(sp)
    sp.add_argument("--solver", choices=("builtin", "external", "auto"), default="auto")
    sp.add_argument("--solver-cmd", default="z3 -in")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="run a program and export its trace")
    common(sp)
    sp.add_argument("--dt", type=float, default=d.h)
    sp.add_argument("--horizon", type=float, default=d.t_max)
    sp.add_argument("--tol-t", type=float, default=d.tol_t)
    sp.add_argument("--tol-v", type=float, default=d.tol_v)
    sp.add_argument("--max-segments", type=int, default=1000)
    sp.add_argument("--max-time", type=float, default=1000.0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("vcs", help="dump verification conditions without solving")
    common(sp)
    sp.set_defaults(func=cmd_vcs)

    sp = sub.add_parser("taxonomy", help="run the zero-crossing case harness")
    common(sp, needs_input=False)
    sp.set_defaults(func=cmd_taxonomy)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
