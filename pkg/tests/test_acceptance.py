"""Acceptance criteria. Each test records one PASS/FAIL line, printed in the terminal summary."""

import math
import os
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from hzc import corpus
from hzc.corpus.mutants import MUTANTS, by_base
from hzc.events import ClosedForm, detect_upcrossing
from hzc.flow import SolverConfig, integrate
from hzc.interp import check_trace, run
from hzc.oracle import oracle_integrate
from hzc.symbolic import active, eval_cexpr, eval_pred, lie_expr
from hzc.syntax import BinOp, Const, Var
from hzc.verify import Invalid, Valid, check_program, gen_vcs, solve_builtin, solve_external

LINES: list = []
G = 9.81


@contextmanager
def criterion(n, label):
    try:
        yield
    except BaseException as exc:
        LINES.append(f"FAIL criterion {n}: {label} ({type(exc).__name__}: {str(exc).splitlines()[0][:120] if str(exc) else ''})")
        raise
    LINES.append(f"PASS criterion {n}: {label}")
    print(LINES[-1])


def test_c01_corpus_accepted():
    with criterion(1, "all corpus programs Accepted by the builtin backend, each under 10 s"):
        for name in corpus.PROGRAMS:
            t0 = time.perf_counter()
            verdict = check_program(corpus.load(name), policy="builtin")
            elapsed = time.perf_counter() - t0
            assert verdict.overall == "Accept", f"{name}: {verdict.overall}"
            assert all(isinstance(r.result, Valid) for r in verdict.results)
            assert elapsed < 10, f"{name} took {elapsed:.1f}s"


def test_c02_mutants_rejected():
    with criterion(2, f"{len(MUTANTS)} unsafe mutants Rejected with a failing VC, none Accepted"):
        for name in corpus.PROGRAMS:
            assert len(by_base(name)) >= 2
        for m in MUTANTS:
            verdict = check_program(m.load(), policy="builtin")
            assert verdict.overall == "Reject", m.name
            bad = [r for r in verdict.results if isinstance(r.result, Invalid)]
            assert bad, m.name
            for r in bad:
                env = dict(r.result.model)
                assert all(eval_pred(h, env, exact=True) for h in r.vc.hypotheses)
                assert not eval_pred(r.vc.goal, env, exact=True)


def test_c03_oracle_agreement():
    h = 1e-3
    tol = max(10 * h * h, 1e-6)
    cfg = SolverConfig(h=h, t_max=20.0)
    with criterion(3, f"event times and post-reset states match the exact oracle within {tol:g}"):
        for name in corpus.PROGRAMS:
            prog = corpus.load(name)
            a = run(prog, cfg, max_segments=6)
            b = run(prog, cfg, max_segments=6, flow=oracle_integrate)
            assert len(a.segments) == len(b.segments), name
            for s, o in zip(a.segments, b.segments):
                assert abs(s.global_end - o.global_end) <= tol, name
                if o.reset is not None:
                    assert np.allclose(s.reset.post_value, o.reset.post_value, atol=tol, rtol=0), name
        closed = {
            "watertank": lambda tr: (tr.event_times[0], tr.event_times[3] - tr.event_times[1]) == pytest.approx((0.8, 3.2), abs=tol),
            "braking": lambda tr: tr.event_times[0] == pytest.approx((-6 + math.sqrt(64.8)) / 6, abs=tol)
            and tr.segments[-1].states[-1][0] == pytest.approx(4.9, abs=tol) and tr.segments[-1].states[-1][0] < 5,
            "bouncing_ball": lambda tr: tr.event_times[0] == pytest.approx(math.sqrt(20 / G), abs=tol)
            and abs(tr.resets[0].post_value[1]) == pytest.approx(0.8 * math.sqrt(20 * G), abs=tol),
            # slope 1 from -1, then jumps to -2 and -3: resets at 1, 3, 6
            "sawtooth": lambda tr: tr.event_times[:3] == pytest.approx([1.0, 3.0, 6.0], abs=tol),
        }
        for name, ok in closed.items():
            assert ok(run(corpus.load(name), cfg, max_segments=6)), name


def test_c04_trace_soundness_witness():
    with criterion(4, "Accepted programs pass check_trace on 50-segment runs in under 30 s"):
        t0 = time.perf_counter()
        for name in corpus.PROGRAMS:
            prog = corpus.load(name)
            tr = run(prog, SolverConfig(h=1e-3, t_max=50.0), max_segments=50, max_global_time=1e5)
            assert check_trace(tr, prog.main.safety, tol=1e-6).holds, name
        assert time.perf_counter() - t0 < 30


def _lin(coeffs, names, c):
    e = Const(float(c))
    for k, x in zip(coeffs, names):
        e = BinOp("+", e, BinOp("*", Const(float(k)), Var(x)))
    return e


def test_c05_active_guards_stay_nonpositive():
    rng = np.random.default_rng(5)
    cfg = SolverConfig(h=1e-2, t_max=5.0)
    names = ("x", "y")
    checked = 0
    with criterion(5, "200 random constant-coefficient systems: active guards stay <= tol_v"):
        for _ in range(200):
            A = rng.uniform(-2, 2, (2, 2)).round(3)
            b = rng.uniform(-2, 2, 2).round(3)
            d = {x: _lin(A[i], names, b[i]) for i, x in enumerate(names)}
            v0 = tuple(rng.uniform(-2, 2, 2).round(3))
            guards = [_lin(rng.uniform(-2, 2, 2).round(3), names, round(float(rng.uniform(-2, 2)), 3))
                      for _ in range(rng.integers(1, 4))]
            r = integrate(d, v0, guards, {}, cfg)
            for i in active(v0, guards, d, {}, names).indices:
                checked += 1
                assert np.all(r.guards[:, i - 1] <= cfg.tol_v), (A, b, v0, i)
        assert checked > 0


def test_c06_taxonomy():
    from hzc.taxonomy import ALL_CASES, COLS, ROWS, STAYING, is_crossing_under, run_harness

    with criterion(6, "taxonomy harness reproduces the Strict and Loose crossing sets"):
        strict = {c.label for c in ALL_CASES if is_crossing_under(c, "strict")}
        loose = {c.label for c in ALL_CASES if is_crossing_under(c, "loose")}
        assert strict == {"A1", "A4", "D1", "D4"}
        assert loose == {"A1", "A3", "A4", "C1", "C3", "C4", "D1", "D3", "D4"}
        assert len(ALL_CASES) == 85
        assert all(c.subcase == STAYING for c in ALL_CASES if c.left == "G" or c.right == "7")
        for r in ROWS:
            for c in COLS:
                cases = [x for x in ALL_CASES if x.left == r and x.right == c]
                for d in ("loose", "strict"):
                    assert len({is_crossing_under(x, d) for x in cases}) == 1
        assert all(row.matches for row in run_harness())


def test_c07_spline_fuzz():
    rng = np.random.default_rng(7)
    with criterion(7, "500 random cubic-spline guards: a crossing is found between the signed samples"):
        for _ in range(500):
            n = int(rng.integers(4, 10))
            ys = rng.uniform(-5, 5, n)
            i = int(rng.integers(0, n - 1))
            k = int(rng.integers(i + 1, n))
            ys[i] = -abs(ys[i]) - 0.1
            ys[k] = abs(ys[k]) + 0.1
            xs = np.linspace(0.0, 1.0, n)
            f = CubicSpline(xs, ys)
            v = detect_upcrossing(ClosedForm(f), (xs[i], xs[k]), dt=(xs[k] - xs[i]) / 400)
            assert v.crossing and xs[i] < v.time < xs[k], (xs, ys, i, k)


def _random_poly(rng, names):
    e = Const(Fraction(int(rng.integers(-5, 6))))
    for _ in range(int(rng.integers(1, 6))):
        m = Const(Fraction(int(rng.integers(-5, 6)) or 1))
        for _ in range(int(rng.integers(1, 4))):
            m = BinOp("*", m, Var(names[int(rng.integers(len(names)))]))
        e = BinOp("+" if rng.random() < 0.7 else "-", e, m)
    return e


def test_c08_lie_derivative_numerics():
    rng = np.random.default_rng(8)
    names = ("x", "y", "z")
    with criterion(8, "100 random polynomials: lie_expr matches central differences to 1e-4 relative"):
        for _ in range(100):
            e = _random_poly(rng, names)
            A = rng.uniform(-2, 2, (3, 3))
            b = rng.uniform(-2, 2, 3)
            d = {x: _lin(A[i], names, b[i]) for i, x in enumerate(names)}
            env = dict(zip(names, rng.uniform(-1.5, 1.5, 3)))
            sym = float(eval_cexpr(lie_expr(e, d), env))
            vel = np.array([float(eval_cexpr(d[x], env)) for x in names])
            h = 1e-5
            fp = float(eval_cexpr(e, {x: env[x] + h * vel[k] for k, x in enumerate(names)}))
            fm = float(eval_cexpr(e, {x: env[x] - h * vel[k] for k, x in enumerate(names)}))
            fd = (fp - fm) / (2 * h)
            assert abs(sym - fd) <= 1e-4 * abs(sym) + 1e-8, (e, sym, fd)


def test_c09_backend_agreement():
    import shutil

    if shutil.which("z3") is None:
        LINES.append("FAIL criterion 9: external solver not installed")
        pytest.fail("z3 not available")
    with criterion(9, "builtin and external backends never contradict on corpus and mutant VCs"):
        progs = [corpus.load(n) for n in corpus.PROGRAMS] + [m.load() for m in MUTANTS]
        n = 0
        for prog in progs:
            for vc in gen_vcs(prog):
                a, b = solve_builtin(vc), solve_external(vc)
                definite = {type(a), type(b)} <= {Valid, Invalid}
                assert not definite or type(a) is type(b), vc.formula()
                n += 1
        assert n > 0


ARTIFACT_SCRIPT = r"""
import sys
from hzc.cli import main
out = sys.argv[1]
from hzc import corpus
for n in corpus.PROGRAMS:
    p = str(corpus.path(n))
    main(["simulate", p, "--out", f"{out}/{n}.csv", "--max-segments", "20", "--max-time", "100"])
    main(["vcs", p, "--format", "json", "--out", f"{out}/{n}.vcs.json"])
    main(["check", p, "--solver", "builtin", "--out", f"{out}/{n}.report.txt"])
    main(["check", p, "--solver", "builtin", "--format", "json", "--out", f"{out}/{n}.report.json"])
main(["taxonomy", "--out", f"{out}/taxonomy.txt"])
"""


def test_c10_determinism(tmp_path):
    with criterion(10, "two independent runs give byte-identical traces, VC dumps and reports"):
        dumps = []
        for k in range(2):
            d = tmp_path / f"run{k}"
            d.mkdir()
            env = dict(os.environ, PYTHONHASHSEED=str(k + 1))
            r = subprocess.run([sys.executable, "-c", ARTIFACT_SCRIPT, str(d)], env=env,
                               capture_output=True, text=True)
            assert r.returncode == 0, r.stderr[-500:]
            dumps.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        assert len(dumps[0]) == 4 * len(corpus.PROGRAMS) + 1
        assert dumps[0] == dumps[1]
