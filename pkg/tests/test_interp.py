import math
from fractions import Fraction

import numpy as np
import pytest

from hzc import corpus
from hzc.corpus.mutants import MUTANTS
from hzc.errors import ResetArityMismatch
from hzc.flow import SolverConfig
from hzc.interp import (
    INFINITE, INFINITE_RESIDUAL, RUNNING, ZENO, Env, check_trace, dstep, global_values, hstep,
    read_csv, run, to_csv,
)
from hzc.oracle import oracle_integrate
from hzc.parser import parse_expr, parse_pred, parse_program

G = 9.81
CFG = SolverConfig(h=1e-3)


def _stream(text, n, env=None):
    de = parse_expr(text, "discrete")
    env = env or Env()
    out = []
    for _ in range(n):
        r = dstep(de, env)
        out.append(r.value)
        de = r.expr
    return out


def test_dstep_letrec_counter():
    vals = _stream("let rec xr = -2. fby (xr -. 1.) in xr", 3)
    assert [float(v) for v in vals] == [-2.0, -3.0, -4.0]


def test_dstep_constant_stream():
    assert [float(v) for v in _stream("5.", 4)] == [5.0] * 4


def test_dstep_last_values():
    env = Env().bind("x", 0.0).bind("v", 14.0071)
    (val,) = _stream("(last x, -0.8 *. last v)", 1, env)
    assert val[0] == 0.0 and val[1] == pytest.approx(-11.20568)


def test_dstep_if_and_let():
    env = Env().bind("c", True)
    assert float(_stream("let w = 2. in if c then w else 3.", 1, env)[0]) == 2.0


def test_watertank_segments():
    prog = corpus.load("watertank")
    env = global_values(prog)
    seg, h2 = hstep(prog.main, env, CFG)
    assert seg.duration == pytest.approx(0.8, abs=1e-8)
    assert seg.reset.j == 1 and np.allclose(seg.reset.post_value, (9.0, -5.0), atol=1e-7)
    seg2, _ = hstep(h2, env, CFG, index=1, global_start=seg.global_end)
    assert seg2.duration == pytest.approx(1.6, abs=1e-7)
    assert seg2.reset.j == 2 and np.allclose(seg2.reset.post_value, (1.0, 5.0), atol=1e-7)
    tr = run(prog, CFG, max_segments=4)
    assert tr.event_times[3] - tr.event_times[1] == pytest.approx(3.2, abs=1e-6)


def test_horizon_gives_infinite_residual():
    prog = parse_program("let rec der x = 0. init -1. reset | up(x) -> 0. in x")
    seg, res = hstep(prog.main, global_values(prog), SolverConfig(t_max=5.0))
    assert res is INFINITE_RESIDUAL and seg.reset is None
    tr = run(prog, SolverConfig(t_max=5.0))
    assert len(tr.segments) == 1 and tr.marker == INFINITE


def test_braking_run():
    tr = run(corpus.load("braking"), CFG)
    assert tr.marker == INFINITE and len(tr.segments) == 3
    s1, s2, s3 = tr.segments
    assert s1.duration == pytest.approx((-6 + math.sqrt(64.8)) / 6, abs=1e-8)
    x, v, a = s1.reset.post_value
    assert a == -0.2 and v == pytest.approx(1 + s1.duration, abs=1e-8)
    assert s2.duration == pytest.approx(v / 0.2, abs=1e-6)
    assert s2.reset.post_value[0] == pytest.approx(4.9, abs=1e-6)
    assert check_trace(tr, parse_pred("x < x_obs")).holds


def test_bouncing_ball_closed_form():
    tr = run(corpus.load("bouncing_ball"), CFG, max_segments=3)
    t, v = math.sqrt(2 * 10 / G), 0.8 * math.sqrt(2 * G * 10)
    for seg in tr.segments:
        assert seg.global_end == pytest.approx(t, abs=1e-6)
        assert seg.reset.post_value[1] == pytest.approx(v, abs=1e-6)
        t, v = t + 2 * v / G, 0.8 * v


def test_sawtooth_closed_form():
    tr = run(corpus.load("sawtooth"), CFG, max_segments=3)
    # slope 1 from -1, then from -2 and -3
    assert tr.event_times == pytest.approx([1.0, 3.0, 6.0], abs=1e-6)
    assert [s.reset.post_value[0] for s in tr.segments] == [-2.0, -3.0, -4.0]


@pytest.mark.parametrize("name", corpus.PROGRAMS)
def test_semantic_conformance_with_oracle(name):
    prog = corpus.load(name)
    a = run(prog, CFG, max_segments=6)
    b = run(prog, CFG, max_segments=6, flow=oracle_integrate)
    assert len(a.segments) == len(b.segments)
    for s, o in zip(a.segments, b.segments):
        assert s.duration == pytest.approx(o.duration, abs=1e-6)
        if o.reset is not None:
            assert s.reset.j == o.reset.j
            assert np.allclose(s.reset.post_value, o.reset.post_value, atol=1e-6)
            # last x equals the state at the crossing
            assert np.allclose(s.reset.pre_state, s.states[-1])


def test_reset_instantaneity():
    tr = run(corpus.load("bouncing_ball"), CFG, max_segments=8)
    for s, nxt in zip(tr.segments, tr.segments[1:]):
        assert nxt.global_start == s.global_start + s.duration


def test_watertank_invariant_holds():
    tr = run(corpus.load("watertank"), CFG, max_segments=10)
    assert check_trace(tr, parse_pred("1. <= level && level <= 9.")).holds


def test_refill_mutant_violates_after_first_event():
    m = next(m for m in MUTANTS if m.name == "watertank_refill")
    tr = run(m.load(), CFG, max_segments=3)
    res = check_trace(tr, parse_pred("1. <= level && level <= 9."))
    assert not res.holds
    t, state = res.first_violation
    assert 0.8 < t < 0.9 and state["level"] > 9.0


def test_zeno_detection():
    src = "let rec der x = 1. init -1. reset | up(x) -> last x -. 0.0000000000001 in x"
    tr = run(parse_program(src), SolverConfig(h=1e-3, tol_v=0.0), max_segments=100)
    assert tr.marker == ZENO and len(tr.segments) < 100


def test_run_bounds():
    tr = run(corpus.load("watertank"), CFG, max_segments=1000, max_global_time=5.0)
    assert tr.marker == RUNNING and tr.duration <= 5.0 + 1e-9
    with pytest.raises(ValueError):
        run(corpus.load("watertank"), CFG, max_segments=0)


def test_reset_arity_mismatch():
    src = "let rec der (x, y) = (1., 0.) init (-1., 0.) reset | up(x) -> 0. in x"
    with pytest.raises(ResetArityMismatch):
        run(parse_program(src), CFG)


def test_csv_round_trip():
    tr = run(corpus.load("bouncing_ball"), CFG, max_segments=3)
    text = to_csv(tr)
    cols = read_csv(text)
    n = sum(len(s.times) for s in tr.segments)
    assert len(cols["global_time"]) == n
    events = [t for t, e in zip(cols["global_time"], cols["is_event"]) if e]
    assert events == tr.event_times
    assert [g for g in cols["guard_index"] if g is not None] == [1, 1, 1]
    assert to_csv(run(corpus.load("bouncing_ball"), CFG, max_segments=3)) == text


def test_decimation_keeps_events():
    a = run(corpus.load("bouncing_ball"), CFG, max_segments=3)
    b = run(corpus.load("bouncing_ball"), CFG, max_segments=3, decimate=10)
    assert b.event_times == a.event_times
    assert sum(len(s.times) for s in b.segments) < sum(len(s.times) for s in a.segments) / 5


def test_bouncing_ball_accumulation_is_flagged():
    tr = run(corpus.load("bouncing_ball"), SolverConfig(h=1e-3, t_max=50.0), max_segments=300,
             max_global_time=1e5)
    assert tr.marker == ZENO
    t_zeno = math.sqrt(2 * 10 / G) * (1 + 2 * 0.8 / (1 - 0.8))
    assert tr.segments[-2].global_end == pytest.approx(t_zeno, abs=1e-3)
