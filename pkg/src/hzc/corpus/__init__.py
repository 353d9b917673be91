"""Bundled example programs."""

from __future__ import annotations

from importlib import resources

PROGRAMS = ("watertank", "braking", "sawtooth", "bouncing_ball")


def path(name: str):
    """Filesystem path of a bundled program (``name`` with or without ``.hzc``)."""
    if not name.endswith(".hzc"):
        name += ".hzc"
    return resources.files(__name__) / name


def source(name: str) -> str:
    return path(name).read_text()


def load(name: str):
    from ..parser import parse_program

    return parse_program(source(name))


def names(include_mutants: bool = False) -> list:
    out = sorted(p.name[:-4] for p in resources.files(__name__).iterdir() if p.name.endswith(".hzc"))
    return out if include_mutants else [n for n in out if "_bad" not in n]
