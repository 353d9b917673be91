"""Program-level verdicts from discharged verification conditions."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SolverProtocolError, SolverUnavailable
from ..wellformed import check_wellformed
from .builtin import solve_builtin
from .smtlib import DEFAULT_CMD, DEFAULT_TIMEOUT, solve_external
from .vc import Invalid, Unknown, Valid, format_model
from .vcgen import gen_vcs

POLICIES = ("builtin", "external", "auto")


@dataclass
class VCResult:
    vc: object
    result: object
    backend: str


@dataclass
class Verdict:
    overall: str  # Accept | Reject | Unknown
    results: list
    warnings: list = field(default_factory=list)

    @property
    def failing(self) -> list:
        return [r for r in self.results if not isinstance(r.result, Valid)]

    def report(self) -> str:
        lines = []
        for k, r in enumerate(self.results, start=1):
            line = f"{k:3d}  {r.vc.provenance:<28} {r.vc.path:<24} {r.result.status}"
            if isinstance(r.result, Invalid):
                line += f"  counterexample: {format_model(r.result.model)}"
            elif isinstance(r.result, Unknown) and r.result.reason:
                line += f"  ({r.result.reason})"
            lines.append(line)
        lines.extend(f"warning: {w}" for w in self.warnings)
        lines.append(f"verdict: {self.overall}")
        return "\n".join(lines)


def aggregate(results) -> str:
    statuses = [r.result for r in results]
    if all(isinstance(s, Valid) for s in statuses):
        return "Accept"
    if any(isinstance(s, Invalid) for s in statuses):
        return "Reject"
    return "Unknown"


def discharge(vc, policy: str = "auto", solver_cmd: str = DEFAULT_CMD, timeout: float = DEFAULT_TIMEOUT):
    """Result and backend name for one VC under ``policy``."""
    if policy not in POLICIES:
        raise ValueError(f"unknown solver policy {policy!r}")
    if policy == "external":
        return solve_external(vc, solver_cmd, timeout), "external"
    res = solve_builtin(vc)
    if policy == "builtin" or isinstance(res, (Valid, Invalid)):
        return res, "builtin"
    try:
        ext = solve_external(vc, solver_cmd, timeout)
    except (SolverUnavailable, SolverProtocolError):
        return res, "builtin"
    return ext, "external"


def check_program(prog, policy: str = "auto", solver_cmd: str = DEFAULT_CMD,
                  timeout: float = DEFAULT_TIMEOUT) -> Verdict:
    check_wellformed(prog)
    vcs = gen_vcs(prog)
    results = []
    for vc in vcs:
        res, backend = discharge(vc, policy, solver_cmd, timeout)
        results.append(VCResult(vc, res, backend))
    warnings = list(vcs.warnings)
    for r in results:
        if r.vc.default_invariant and r.vc.provenance.startswith("Bridge") and not isinstance(r.result, Valid):
            warnings.append(f"MissingAnnotation: {r.vc.path} has no invariant annotation and the "
                            "active guard facts alone do not establish the safety predicate")
    return Verdict(aggregate(results), results, warnings)
