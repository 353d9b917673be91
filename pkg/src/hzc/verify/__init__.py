"""Static verification: VC generation and decision procedures."""

from .builtin import solve_builtin
from .check import Verdict, check_program, discharge
from .smtlib import emit, solve_external
from .vc import VC, Invalid, Unknown, Valid
from .vcgen import VCSet, gen_vcs

__all__ = [
    "VC", "VCSet", "Valid", "Invalid", "Unknown", "Verdict",
    "gen_vcs", "solve_builtin", "solve_external", "emit", "check_program", "discharge",
]
