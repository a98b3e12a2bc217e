"""Method C: bounded model checking of the runtime biconditional.

Exhaustive depth-first enumeration of every length-K envelope sequence over
the declared alphabet plus noop, each replayed through a gate model built on
the refinement dispatcher. Every step is checked against the biconditional:
no world-state change without a corresponding admitted (and audited)
envelope. Violations are classified into three mutually exclusive kinds so a
seeded-fault gate yields exactly its own kind:

    executed-but-deny       executed although the envelope was denied
    executed-without-audit  admitted and executed but no audit record
    admitted-without-audit  admitted, no audit record, nothing executed
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from ..errors import BmcBoundError
from .dispatch import RefinedDispatcher, _declared_caps

DEFAULT_BOUND = 8
DEFAULT_TRACE_CEILING = 2_000_000
MAX_STORED_VIOLATIONS = 1000

NOOP = None  # the +1 alphabet symbol: no envelope this step

KIND_EXECUTED_BUT_DENY = "executed-but-deny"
KIND_EXECUTED_WITHOUT_AUDIT = "executed-without-audit"
KIND_ADMITTED_WITHOUT_AUDIT = "admitted-without-audit"


@dataclass(frozen=True)
class StepOutcome:
    admitted: bool
    audited: bool
    executed: bool


class ReferenceGate:
    """Correct gate: admit via the dispatcher, audit, then execute."""

    def __init__(self, caps: Iterable[str]):
        self.dispatcher = RefinedDispatcher(caps=frozenset(caps))

    def step(self, symbol: str | None) -> StepOutcome:
        if symbol is NOOP:
            return StepOutcome(False, False, False)
        if self.dispatcher.admits(symbol):
            return StepOutcome(admitted=True, audited=True, executed=True)
        return StepOutcome(admitted=False, audited=False, executed=False)


class ExecutesWithoutAuditGate(ReferenceGate):
    """Seeded fault: admitted envelopes execute with no audit record."""

    def step(self, symbol: str | None) -> StepOutcome:
        outcome = super().step(symbol)
        if outcome.admitted:
            return StepOutcome(admitted=True, audited=False, executed=True)
        return outcome


class ExecutesWhenDeniedGate(ReferenceGate):
    """Seeded fault: every envelope is denied yet still executes."""

    def step(self, symbol: str | None) -> StepOutcome:
        if symbol is NOOP:
            return StepOutcome(False, False, False)
        return StepOutcome(admitted=False, audited=False, executed=True)


class AdmitsWithoutAuditGate(ReferenceGate):
    """Seeded fault: admission happens silently and nothing executes."""

    def step(self, symbol: str | None) -> StepOutcome:
        outcome = super().step(symbol)
        if outcome.admitted:
            return StepOutcome(admitted=True, audited=False, executed=False)
        return outcome


def classify(outcome: StepOutcome) -> str | None:
    if outcome.executed and not outcome.admitted:
        return KIND_EXECUTED_BUT_DENY
    if outcome.admitted and outcome.executed and not outcome.audited:
        return KIND_EXECUTED_WITHOUT_AUDIT
    if outcome.admitted and not outcome.executed and not outcome.audited:
        return KIND_ADMITTED_WITHOUT_AUDIT
    return None


@dataclass(frozen=True)
class Violation:
    kind: str
    trace: tuple[str | None, ...]
    step: int

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "trace": ["noop" if s is NOOP else s for s in self.trace],
            "step": self.step,
        }


@dataclass(frozen=True)
class BmcVerdict:
    bound: int
    alphabet_size: int
    traces_explored: int
    violations: tuple[Violation, ...]  # stored sample, capped
    violation_counts: dict[str, int]  # complete per-kind totals

    @property
    def clean(self) -> bool:
        return not self.violation_counts

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "bound": self.bound,
            "alphabetSize": self.alphabet_size,
            "tracesExplored": self.traces_explored,
            "violationCounts": dict(sorted(self.violation_counts.items())),
            "violations": [v.to_json_dict() for v in self.violations],
        }


def state_space_size(declared_count: int, bound: int) -> int:
    """Closed form (|D| + 1) ** K."""
    return (declared_count + 1) ** bound


def bmc(
    manifest_or_caps: Any,
    k: int = DEFAULT_BOUND,
    gate_factory: Callable[[Iterable[str]], ReferenceGate] | None = None,
    trace_ceiling: int = DEFAULT_TRACE_CEILING,
) -> BmcVerdict:
    """Replay every length-K trace through a fresh gate and check each step.

    The search refuses to start past the trace ceiling; reduce K (or raise
    the ceiling explicitly for a budgeted full run).
    """
    declared = tuple(sorted(set(_declared_caps(manifest_or_caps))))
    expected = state_space_size(len(declared), k)
    if expected > trace_ceiling:
        raise BmcBoundError(
            f"state space (|D|+1)^K = {expected} exceeds the {trace_ceiling} trace "
            "ceiling; reduce K"
        )
    factory = gate_factory or ReferenceGate
    alphabet: tuple[str | None, ...] = (NOOP,) + declared
    violations: list[Violation] = []
    counts: dict[str, int] = {}
    explored = 0
    for trace in itertools.product(alphabet, repeat=k):
        gate = factory(declared)
        for step_index, symbol in enumerate(trace):
            kind = classify(gate.step(symbol))
            if kind is not None:
                counts[kind] = counts.get(kind, 0) + 1
                if len(violations) < MAX_STORED_VIOLATIONS:
                    violations.append(Violation(kind=kind, trace=trace, step=step_index))
        explored += 1
    return BmcVerdict(
        bound=k,
        alphabet_size=len(alphabet),
        traces_explored=explored,
        violations=tuple(violations),
        violation_counts=counts,
    )
