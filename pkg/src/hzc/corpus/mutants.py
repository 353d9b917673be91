"""Deliberately unsafe variants of the bundled programs.

Each mutant is a textual edit of a corpus program that breaks its safety
argument; the checker must never accept one.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import source


@dataclass(frozen=True)
class Mutant:
    name: str
    base: str
    description: str
    old: str
    new: str

    def source(self) -> str:
        text = source(self.base)
        if self.old not in text:
            raise ValueError(f"mutant {self.name}: pattern not found in {self.base}")
        return text.replace(self.old, self.new, 1)

    def load(self):
        from ..parser import parse_program

        return parse_program(self.source())


MUTANTS = (
    Mutant("watertank_guard11", "watertank", "upper guard raised to level 11 with the bound unchanged",
           "up(level -. 9.)", "up(level -. 11.)"),
    Mutant("watertank_refill", "watertank", "upper reset keeps filling",
           "(last level, -5.)", "(last level, 5.)"),
    Mutant("watertank_bound8", "watertank", "safety bound tightened to level <= 8",
           "level <= 9.)", "level <= 8.)"),
    Mutant("braking_weak", "braking", "braking deceleration halved in the reset",
           "(last x, last v, brake)", "(last x, last v, -0.1)"),
    Mutant("braking_nomargin", "braking", "braking guard loses its safety margin",
           "+. 0.1 -. x_obs", "-. x_obs"),
    Mutant("sawtooth_head", "sawtooth", "restart value made positive",
           "= -2. fby", "= 2. fby"),
    Mutant("sawtooth_tail", "sawtooth", "restart values increase",
           "(xr -. 1.)", "(xr +. 1.)"),
    Mutant("sawtooth_init", "sawtooth", "initial value above the bound",
           "1. init -1.", "1. init 1."),
    Mutant("ball_restitution", "bouncing_ball", "restitution coefficient 1.2 gains energy",
           "-0.8 *. last v", "-1.2 *. last v"),
    Mutant("ball_height", "bouncing_ball", "dropped from above the ceiling",
           "v init y0", "v init 12."),
    Mutant("ball_guard", "bouncing_ball", "ground guard moved below the floor",
           "up(-. y)", "up(-. y -. 1.)"),
)


def by_base(base: str) -> list:
    return [m for m in MUTANTS if m.base == base]
