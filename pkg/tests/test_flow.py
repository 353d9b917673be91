import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hzc.errors import DivisionByZero, NonFiniteState, OracleUnsupported
from hzc.flow import Crossed, Horizon, SolverConfig, integrate
from hzc.oracle import oracle_integrate, trajectories
from hzc.parser import parse_expr
from hzc.symbolic import active, eval_cexpr
from hzc.syntax import BinOp, Const, Var

P = parse_expr
CFG = SolverConfig(h=1e-3, t_max=20.0)
BRAKE_G = {"brake": -0.2, "x_obs": 5.0}
BRAKE_D = {"x": Var("v"), "v": Var("a"), "a": Const(Fraction(0))}
BRAKE_GUARDS = [P("x -. (v *. v /. (2. *. brake)) +. 0.1 -. x_obs"), P("-. v")]


def test_watertank_segment():
    d = {"level": Var("flow"), "flow": Const(Fraction(0))}
    r = integrate(d, (5.0, 5.0), [P("level -. 9."), P("-. level +. 1.")], {}, CFG)
    assert isinstance(r.outcome, Crossed) and r.outcome.j == 1
    assert abs(r.outcome.t_r - 0.8) <= 1e-8
    assert abs(r.outcome.state[0] - 9.0) <= 1e-7


def test_sawtooth_segment():
    r = integrate({"x": Const(Fraction(1))}, (-1.0,), [Var("x")], {}, CFG)
    assert abs(r.outcome.t_r - 1.0) <= 1e-8


def test_braking_segment():
    r = integrate(BRAKE_D, (0.0, 1.0, 1.0), BRAKE_GUARDS, BRAKE_G, CFG)
    exact = (-6 + math.sqrt(64.8)) / 6
    assert r.outcome.j == 1 and abs(r.outcome.t_r - exact) <= 1e-8


def test_bouncing_ball_segment():
    d = {"y": Var("v"), "v": P("-. g")}
    r = integrate(d, (10.0, 0.0), [P("-. y")], {"g": 9.81}, CFG)
    assert abs(r.outcome.t_r - math.sqrt(20 / 9.81)) <= 1e-8


def test_horizon_outcome():
    r = integrate({"x": Const(Fraction(-1))}, (0.0,), [Var("x")], {}, SolverConfig(h=0.01, t_max=2.0))
    assert isinstance(r.outcome, Horizon) and r.t_end == 2.0
    assert len(r.times) == 201 and np.allclose(np.diff(r.times), 0.01)


def test_chunking_does_not_change_result():
    d = {"y": Var("v"), "v": P("-. g")}
    a = integrate(d, (10.0, 0.0), [P("-. y")], {"g": 9.81}, SolverConfig(h=1e-3, chunk=16384))
    b = integrate(d, (10.0, 0.0), [P("-. y")], {"g": 9.81}, SolverConfig(h=1e-3, chunk=97))
    assert a.outcome == b.outcome
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)


def test_simultaneous_guards_pick_lowest_index():
    r = integrate({"x": Const(Fraction(1))}, (-1.0,), [P("x -. 0."), Var("x")], {}, CFG)
    assert r.outcome.j == 1
    r = integrate({"x": Const(Fraction(1))}, (-1.0,), [P("x -. 0.5"), Var("x")], {}, CFG)
    assert r.outcome.j == 2 and abs(r.outcome.t_r - 1.0) < 1e-8


def test_guard_starting_nonnegative_needs_arming():
    # guard positive at t=0 must first dip below zero
    r = integrate({"x": Const(Fraction(-1))}, (1.0,), [Var("x")], {}, SolverConfig(h=0.01, t_max=3.0))
    assert isinstance(r.outcome, Horizon)


def test_errors():
    with pytest.raises(DivisionByZero):
        integrate({"x": P("1. /. (x -. x)")}, (0.0,), [], {}, CFG)
    with pytest.raises(NonFiniteState):
        integrate({"x": P("x *. x")}, (1.0,), [], {}, SolverConfig(h=0.01, t_max=5.0))
    with pytest.raises(ValueError):
        SolverConfig(h=0.0)


def test_oracle_examples():
    r = oracle_integrate(BRAKE_D, (0.0, 1.0, 1.0), BRAKE_GUARDS, BRAKE_G, CFG)
    assert abs(r.outcome.t_r - (-6 + math.sqrt(64.8)) / 6) < 1e-12
    d = {"level": Var("flow"), "flow": Const(Fraction(0))}
    r = oracle_integrate(d, (5.0, 5.0), [P("level -. 9.")], {}, CFG)
    assert r.outcome.t_r == pytest.approx(0.8, abs=1e-15)


def test_oracle_rejects_nonchain():
    with pytest.raises(OracleUnsupported):
        trajectories({"x": P("x *. 2.")}, (1.0,), {})


def test_pure_python_kernels_agree():
    code = (
        "from fractions import Fraction\n"
        "from hzc.flow import integrate, SolverConfig\n"
        "from hzc.parser import parse_expr as P\n"
        "from hzc import _kernels\n"
        "r = integrate({'y': P('v'), 'v': P('-. g')}, (10.0, 0.0), [P('-. y')], {'g': 9.81},"
        " SolverConfig(h=1e-2))\n"
        "print(_kernels.USE_NUMBA, repr(r.outcome.t_r), repr(float(r.states[-1][1])))\n"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, HZC_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        outs.append(out.stdout.split())
    assert outs[0][0] == "False" and outs[1][0] == "True"
    assert outs[0][1:] == outs[1][1:]


# ---------------------------------------------------------------- properties


def _lin(coeffs, names, c):
    e = Const(float(c))
    for k, x in zip(coeffs, names):
        e = BinOp("+", e, BinOp("*", Const(float(k)), Var(x)))
    return e


@st.composite
def linear_systems(draw):
    num = st.floats(-2, 2, allow_nan=False).map(lambda v: round(v, 3))
    A = [[draw(num) for _ in range(2)] for _ in range(2)]
    b = [draw(num) for _ in range(2)]
    d = {x: _lin(A[i], ("x", "y"), b[i]) for i, x in enumerate(("x", "y"))}
    v0 = (draw(num), draw(num))
    guards = [_lin([draw(num), draw(num)], ("x", "y"), draw(num)) for _ in range(draw(st.integers(1, 3)))]
    return d, v0, guards


def check_active_preserved(d, v0, guards, cfg):
    """Guards active at t=0 stay <= tol_v on every sample up to the crossing or horizon."""
    r = integrate(d, v0, guards, {}, cfg)
    act = active(v0, guards, d, {}, ("x", "y"))
    for i in act.indices:
        vals = r.guards[:, i - 1]
        if np.any(vals > cfg.tol_v):
            return False, (i, float(vals.max()))
    return True, None


@given(linear_systems())
@settings(max_examples=100)
def test_active_guards_stay_nonpositive(sys_):
    d, v0, guards = sys_
    ok, info = check_active_preserved(d, v0, guards, SolverConfig(h=1e-2, t_max=5.0))
    assert ok, info


@st.composite
def chain_systems(draw):
    num = st.integers(-30, 30).map(lambda n: Fraction(n, 10))
    acc = draw(num)
    v0 = (float(draw(num)), float(draw(num)))
    guard = _lin([draw(num), draw(num)], ("x", "v"), draw(num))
    return {"x": Var("v"), "v": Const(acc)}, v0, guard


@given(chain_systems())
@settings(max_examples=60)
def test_integrate_matches_oracle(data):
    d, v0, guard = data
    cfg = SolverConfig(h=1e-3, t_max=4.0)
    num = integrate(d, v0, [guard], {}, cfg)
    ex = oracle_integrate(d, v0, [guard], {}, cfg)
    assert type(num.outcome) is type(ex.outcome)
    if isinstance(ex.outcome, Crossed):
        assert abs(num.outcome.t_r - ex.outcome.t_r) <= max(10 * cfg.h ** 2, 1e-6)
        assert np.allclose(num.outcome.state, ex.outcome.state, atol=1e-6)


def test_dip_shorter_than_one_step_from_zero():
    # ball leaving the ground slowly: -y is 0 and decreasing, back above zero after 2v/g < h
    d = {"y": Var("v"), "v": Const(Fraction(-981, 100))}
    r = integrate(d, (0.0, 2e-4), [P("-. y")], {}, SolverConfig(h=1e-3))
    assert isinstance(r.outcome, Crossed)
    # crossings are localized where the guard reaches +tol_v
    root = max(np.roots([9.81 / 2, -2e-4, -1e-9]).real)
    assert r.outcome.t_r == pytest.approx(root, abs=1e-9)


def test_dip_inside_one_step_is_probed():
    # x = -t^2 + 2000 t^3 is negative only on (0, 5e-4) and flat at t = 0
    d = {"x": Var("v"), "v": Var("a"), "a": Const(Fraction(12000))}
    r = integrate(d, (0.0, 0.0, -2.0), [P("x")], {}, SolverConfig(h=1e-3))
    assert isinstance(r.outcome, Crossed)
    root = max(np.roots([2000.0, -1.0, 0.0, -1e-9]).real)
    assert r.outcome.t_r == pytest.approx(root, abs=1e-9)
