import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hzc import corpus
from hzc.cli import EXIT_INPUT, EXIT_OK, EXIT_REJECT, main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.mark.parametrize("name", corpus.PROGRAMS)
def test_check_accepts_corpus(name, capsys):
    assert run_cli("check", corpus.path(name), "--solver", "builtin") == EXIT_OK
    assert "Accept" in capsys.readouterr().out


def test_check_rejects_mutant(capsys):
    assert run_cli("check", corpus.path("watertank_bad"), "--solver", "builtin") == EXIT_REJECT
    out = capsys.readouterr().out
    assert "Reject" in out and "level" in out


def test_check_json(tmp_path):
    out = tmp_path / "v.json"
    assert run_cli("check", corpus.path("watertank"), "--format", "json", "--out", out) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["verdict"] == "Accept" and len(doc["vcs"]) == 13


def test_missing_file_is_input_error(tmp_path, capsys):
    assert run_cli("check", tmp_path / "nope.hzc") == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_bad_arguments_are_input_errors():
    assert run_cli("frobnicate") == EXIT_INPUT
    assert run_cli("simulate", corpus.path("watertank"), "--dt", "-1") == EXIT_INPUT


def test_simulate_ball_summary(tmp_path, capsys):
    out = tmp_path / "ball.csv"
    code = run_cli("simulate", corpus.path("bouncing_ball"), "--out", out, "--max-segments", "3")
    summary = capsys.readouterr().out
    assert code == EXIT_OK
    assert "t_r=1.427843" in summary and "t_r=3.712392" in summary
    assert "invariant holds on the trace" in summary
    header = out.read_text().splitlines()[0]
    assert header.startswith("global_time,segment_index")


def test_simulate_braking_infinite(capsys):
    assert run_cli("simulate", corpus.path("braking")) == EXIT_OK
    cap = capsys.readouterr()
    assert "infinite segment reached" in cap.err
    assert cap.out.startswith("global_time")


def test_simulate_json(capsys):
    assert run_cli("simulate", corpus.path("sawtooth"), "--format", "json", "--max-segments", "4") == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    times = [e["time"] for e in doc["events"]]
    assert times[:3] == pytest.approx([1.0, 3.0, 6.0], abs=1e-6)


def test_vcs_json(tmp_path):
    out = tmp_path / "vcs.json"
    assert run_cli("vcs", corpus.path("watertank"), "--format", "json", "--out", out) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["vcs"]) == 13
    assert all(v["smtlib"].rstrip().endswith("(exit)") for v in doc["vcs"])


def test_taxonomy(capsys):
    assert run_cli("taxonomy") == EXIT_OK
    assert "85/85" in capsys.readouterr().out


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "hzc.cli", "check", str(corpus.path("sawtooth"))],
                       capture_output=True, text=True)
    assert r.returncode == 0


SOURCES = [corpus.source(n) for n in corpus.PROGRAMS]


@given(st.sampled_from(SOURCES), st.integers(0, 10_000), st.integers(1, 40), st.text(max_size=6))
@settings(max_examples=60)
def test_malformed_input_never_crashes(tmp_path_factory, src, at, width, junk):
    at %= len(src)
    text = src[:at] + junk + src[at + width:]
    p = tmp_path_factory.mktemp("fz") / "p.hzc"
    p.write_text(text)
    code = main(["vcs", str(p), "--out", str(p.with_suffix(".out"))])
    assert code in (EXIT_OK, EXIT_INPUT)
