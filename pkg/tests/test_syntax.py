import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hzc import corpus
from hzc.errors import (
    ArityError, LastOutsideReset, ParseError, StratificationError, Unsupported, UnboundVariable,
    UnguardedRecursion, WellformednessError,
)
from hzc.parser import parse_expr, parse_pred, parse_program, tokenize
from hzc.printer import pretty, pretty_cexpr, pretty_dexpr, pretty_pred
from hzc.syntax import BinOp, Const, Embed, Neg, Var, free_vars
from hzc.wellformed import check_wellformed, collect_violations

from strategies import cexprs, dexprs, preds, programs

WATERTANK = """
let rec der (level, flow) : { v : float * float | box(1. <= level && level <= 9.) } =
  (flow init 5., 0. init 5.)
  reset
  | up(level -. 9.) -> (last level, -5.)
  | up(-. level +. 1.) -> (last level, 5.)
in (level, flow)
"""


def test_watertank_shape():
    prog = parse_program(WATERTANK)
    h = prog.main
    assert h.binder == ("level", "flow")
    assert len(h.resets) == 2
    assert h.guards == (parse_expr("level -. 9."), parse_expr("-. level +. 1."))
    check_wellformed(prog)


def test_sawtooth_simplified():
    prog = parse_program("let rec der x = 1. init -1. reset up(x) -> -2. in x")
    assert prog.main.arity == 1 and len(prog.main.resets) == 1
    check_wellformed(prog)


def test_fby_in_derivative_is_stratification_error():
    with pytest.raises(StratificationError):
        parse_program("let rec der x = fby 1. 2. init 0. in x")


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse_program("let rec der x = 1. init\n  in x")
    assert exc.value.line == 2
    assert exc.value.expected


def test_nested_comments_and_negative_literals():
    prog = parse_program("(* a (* nested *) comment *) let rec der x = -1.5 init -2. in x")
    assert prog.main.deriv == Const(prog.main.deriv.value)
    assert float(prog.main.deriv.value) == -1.5


def test_unary_minus_binds_tighter():
    e = parse_expr("-. x *. y")
    assert e == BinOp("*", Neg(Var("x")), Var("y"))


def test_double_underscore_identifiers_rejected():
    with pytest.raises(ParseError):
        parse_program("let rec der x__pre = 1. init 0. in x__pre")


@pytest.mark.parametrize("name", corpus.names(include_mutants=True))
def test_corpus_round_trip(name):
    prog = corpus.load(name)
    again = parse_program(pretty(prog))
    assert again == prog
    check_wellformed(prog)


def test_arity_error():
    prog = parse_program("let rec der (x, y) = (1. init 0., 1. init 0.) in x")
    bad = parse_program("let rec der (x, y) = (1., 1.) init (0., 0., 0.) in x")
    check_wellformed(prog)
    with pytest.raises(ArityError):
        check_wellformed(bad)


def test_unbound_global():
    with pytest.raises(UnboundVariable):
        check_wellformed(parse_program("let rec der x = g init 0. in x"))


def test_violations_carry_paths():
    prog = parse_program("let rec der (x, y) = (g, 1.) init (0., 0., 0.) in x")
    vs = collect_violations(prog)
    assert {type(v) for v in vs} >= {ArityError, UnboundVariable}
    assert all(v.path.startswith("main") for v in vs)
    with pytest.raises(WellformednessError) as exc:
        check_wellformed(prog)
    assert len(exc.value.violations) == len(vs)


def test_last_outside_reset():
    with pytest.raises(LastOutsideReset):
        check_wellformed(parse_program("let rec der x = last x init 0. in x"))


def test_unguarded_recursion():
    src = "let rec der x = 1. init 0. reset | up(x) -> (let rec r = r -. 1. in r) in x"
    with pytest.raises(UnguardedRecursion):
        check_wellformed(parse_program(src))


def test_application_unsupported():
    src = "let f (a : float) : float = a\nlet rec der x = 1. init 0. reset | up(x) -> f (last x) in x"
    with pytest.raises(Unsupported):
        check_wellformed(parse_program(src))


# ---------------------------------------------------------------- properties


@given(cexprs())
def test_cexpr_round_trip(e):
    assert parse_expr(pretty_cexpr(e)) == e


@given(preds())
def test_pred_round_trip(p):
    assert parse_pred(pretty_pred(p)) == p


@given(dexprs())
def test_dexpr_round_trip(d):
    assert parse_expr(pretty_dexpr(d), "discrete") == d


@given(programs())
@settings(max_examples=60)
def test_program_round_trip(prog):
    assert parse_program(pretty(prog)) == prog


@given(programs())
@settings(max_examples=60)
def test_guards_are_continuous(prog):
    again = parse_program(pretty(prog))
    for g in again.main.guards:
        assert not isinstance(g, Embed)
        assert free_vars(g) <= {"x"}


TOKENS = ["let", "rec", "der", "x", "=", "1.", "init", "in", "reset", "|", "up", "(", ")", "->",
          "+.", "*.", "fby", ",", "{", "}", ":", "float", "box", "<=", "&&", "last", "-.", "invariant"]


@given(st.lists(st.sampled_from(TOKENS), max_size=25))
@settings(max_examples=300)
def test_rejection_is_total(tokens):
    text = " ".join(tokens)
    try:
        prog = parse_program(text)
    except (ParseError, StratificationError):
        return
    # anything accepted must be printable and re-parse to the same tree
    assert parse_program(pretty(prog)) == prog


def test_tokenizer_reports_bad_character():
    with pytest.raises(ParseError):
        tokenize("let x = 1. $ 2.")
