"""Composable skill-verification stack.

Three methods close the verification lattice at the top: static effect
containment (a sound over-approximation of script effects), refinement-typed
dispatch (the only ingress path admits exactly the declared capabilities),
and bounded model checking of the runtime biconditional. Their evidence is
signed into a four-file proof-carrying bundle the consumer re-checks from
scratch at load time.
"""

from .effects import SKILL_CAPABILITIES, TOP_TOKEN, EffectSet
from .skills import SkillManifest, parse_skill_manifest, sign_skill_manifest, write_skill_md
from .static_scan import StaticVerdict, analyze_scripts
from .dispatch import Envelope, RefinedDispatcher, build_refined_dispatch, leakage_bound
from .bmc import (
    AdmitsWithoutAuditGate,
    BmcVerdict,
    ExecutesWhenDeniedGate,
    ExecutesWithoutAuditGate,
    ReferenceGate,
    bmc,
    state_space_size,
)
from .bundle import (
    BUNDLE_FILES,
    BundleVerifyResult,
    instance_hash,
    sign_bundle,
    verify_formal_bundle,
)

__all__ = [
    "SKILL_CAPABILITIES",
    "TOP_TOKEN",
    "EffectSet",
    "SkillManifest",
    "parse_skill_manifest",
    "sign_skill_manifest",
    "write_skill_md",
    "StaticVerdict",
    "analyze_scripts",
    "Envelope",
    "RefinedDispatcher",
    "build_refined_dispatch",
    "leakage_bound",
    "ReferenceGate",
    "ExecutesWithoutAuditGate",
    "ExecutesWhenDeniedGate",
    "AdmitsWithoutAuditGate",
    "BmcVerdict",
    "bmc",
    "state_space_size",
    "BUNDLE_FILES",
    "BundleVerifyResult",
    "instance_hash",
    "sign_bundle",
    "verify_formal_bundle",
]
