"""Capability vocabulary and effect sets with an absorbing top element."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

# Ordered effect vocabulary over which script effects are over-approximated.
SKILL_CAPABILITIES = (
    "net.egress",
    "fs.read",
    "fs.write.rev",
    "fs.write.irrev",
    "tool.invoke",
    "spawn.proc",
    "publish",
    "pay",
    "mutate.schema",
)

TOP_TOKEN = "⊤"


@dataclass(frozen=True)
class EffectSet:
    """Subset of the vocabulary, or the lattice top (absorbs union)."""

    tokens: frozenset[str] = frozenset()
    top: bool = False

    @classmethod
    def empty(cls) -> "EffectSet":
        return cls()

    @classmethod
    def top_element(cls) -> "EffectSet":
        return cls(top=True)

    @classmethod
    def of(cls, tokens: Iterable[str]) -> "EffectSet":
        return cls(tokens=frozenset(tokens))

    def union(self, other: "EffectSet") -> "EffectSet":
        if self.top or other.top:
            return EffectSet.top_element()
        return EffectSet(tokens=self.tokens | other.tokens)

    def add(self, token: str) -> "EffectSet":
        if self.top:
            return self
        return EffectSet(tokens=self.tokens | {token})

    def is_contained_in(self, declared: Iterable[str]) -> bool:
        return not self.top and self.tokens <= set(declared)

    def to_json(self) -> "list[str] | str":
        return TOP_TOKEN if self.top else sorted(self.tokens)
