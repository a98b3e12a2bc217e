"""Method B: refinement-typed dispatch.

The dispatcher is the reference gate model's only ingress path: an envelope
whose capability is outside the manifest's declared set (or not in the
vocabulary at all) never reaches a host API. Per-envelope information leakage
through the admit/reject channel is bounded by log2(|D|+1) bits.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Any

from ..canonical import canonicalize
from ..errors import RefinementError
from .effects import SKILL_CAPABILITIES

ARGUMENT_SYMBOL = "*"  # envelope arguments are abstracted to one symbol


@dataclass(frozen=True)
class Envelope:
    capability: str
    argument: str = ARGUMENT_SYMBOL


def _declared_caps(manifest: Any) -> tuple[str, ...]:
    caps = getattr(manifest, "caps", None)
    if caps is None:
        caps = getattr(manifest, "capabilities", None)
    if caps is None:
        caps = manifest
    return tuple(caps)


@dataclass(frozen=True)
class RefinedDispatcher:
    """Frozen: the admitted set is fixed at construction."""

    caps: frozenset[str]
    vocabulary: frozenset[str] = frozenset(SKILL_CAPABILITIES)

    def admits(self, capability: str) -> bool:
        return capability in self.vocabulary and capability in self.caps

    def dispatch(self, envelope: Envelope) -> Envelope:
        if envelope.capability not in self.vocabulary:
            raise RefinementError(f"unknown capability token {envelope.capability!r}")
        if envelope.capability not in self.caps:
            raise RefinementError(
                f"capability {envelope.capability!r} outside the declared set"
            )
        return envelope

    def fixture_digest(self) -> str:
        """Digest of the admit/reject map over the whole vocabulary plus one
        deliberately-unknown probe token; changes iff the predicate changes."""
        probe = dict.fromkeys(sorted(self.vocabulary), False)
        for token in self.vocabulary:
            probe[token] = self.admits(token)
        probe["__unknown-probe__"] = self.admits("__unknown-probe__")
        return hashlib.sha256(canonicalize(probe)).hexdigest()


def build_refined_dispatch(manifest: Any) -> RefinedDispatcher:
    """Dispatcher admitting exactly the manifest's declared caps."""
    caps = frozenset(_declared_caps(manifest))
    unknown = caps - frozenset(SKILL_CAPABILITIES)
    if unknown:
        raise RefinementError(f"manifest declares unknown capabilities: {sorted(unknown)}")
    return RefinedDispatcher(caps=caps)


def leakage_bound(manifest: Any) -> float:
    """Per-envelope leakage bound in bits: log2(|D| + 1)."""
    return math.log2(len(set(_declared_caps(manifest))) + 1)


def types_proof_document(dispatcher: RefinedDispatcher) -> dict[str, Any]:
    return {
        "predicate": {"caps": sorted(dispatcher.caps)},
        "vocabulary": sorted(dispatcher.vocabulary),
        "fixtureDigest": dispatcher.fixture_digest(),
        "leakageBoundBits": math.log2(len(dispatcher.caps) + 1),
    }
