"""Verification conditions and solver outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..printer import pretty_pred
from ..syntax import conj


@dataclass(frozen=True)
class VC:
    hypotheses: tuple
    goal: object
    provenance: str
    path: str = ""
    unsupported: str = ""  # set when the premise has no supported rule
    default_invariant: bool = False

    def formula(self) -> str:
        hyps = " && ".join(f"({pretty_pred(h)})" for h in self.hypotheses) or "true"
        return f"{hyps}  |-  {pretty_pred(self.goal)}"

    @property
    def antecedent(self):
        return conj(self.hypotheses)


@dataclass(frozen=True)
class Valid:
    status = "Valid"


@dataclass(frozen=True)
class Invalid:
    model: dict = field(default_factory=dict)
    status = "Invalid"


@dataclass(frozen=True)
class Unknown:
    reason: str = ""
    status = "Unknown"


def format_model(model: dict) -> str:
    parts = []
    for k in sorted(model):
        v = model[k]
        if isinstance(v, bool):
            parts.append(f"{k}={'true' if v else 'false'}")
        else:
            try:
                parts.append(f"{k}={float(v):.10g}")
            except (TypeError, ValueError):
                parts.append(f"{k}={v}")
    return ", ".join(parts)
