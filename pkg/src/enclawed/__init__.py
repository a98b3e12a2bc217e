"""enclawed: portable hardening primitives for regulated-enclave deployments.

Library surface re-exported here; the CLI entry point lives in enclawed.cli
and the local services in enclawed.proxy and enclawed.control_api.
"""

from .classification import (
    ClassificationScheme,
    Label,
    LevelDef,
    PRESET_SCHEMES,
    access_check,
    dominates,
    format_label,
    load_scheme_by_name,
    lub,
    make_label,
    parse_classification_scheme,
    parse_label,
)
from .audit import AuditLog, AuditRecord, VerifyResult, verify_chain
from .canonical import canonicalize, deep_sanitize
from .policy import Flavor, Policy, default_policy, parse_flavor, assert_fips_mode
from .egress import (
    EgressDecision,
    EgressEngine,
    EgressTarget,
    check_egress,
    ip_in_cidr,
    narrow_for_extension,
    normalize_target,
)
from .signing import (
    ModuleManifest,
    TrustRoot,
    TrustRootHolder,
    canonical_manifest_bytes,
    sign_manifest,
    verify_manifest,
)
from .admission import (
    AdmissionDecision,
    admit_extension,
    biconditional_net_check,
    check_module,
    preload_module_decisions,
)
from .boot import RuntimeState, bootstrap, get_runtime
from .dlp import DlpFinding, ScanOptions, redact, scan
from .prompt_shield import InjectionFinding, detect_injection, sanitize_for_prompt
from .crypto import Envelope, SecretBuffer, derive_key, fips_probe, open_envelope, seal, with_secret
from .txbuffer import RollbackResult, TransactionBuffer, TxRecord
from .hitl import AgentSession, HitlController, SessionState
from . import errors

__version__ = "0.1.0"

__all__ = [
    "ClassificationScheme",
    "Label",
    "LevelDef",
    "PRESET_SCHEMES",
    "access_check",
    "dominates",
    "format_label",
    "load_scheme_by_name",
    "lub",
    "make_label",
    "parse_classification_scheme",
    "parse_label",
    "AuditLog",
    "AuditRecord",
    "VerifyResult",
    "verify_chain",
    "canonicalize",
    "deep_sanitize",
    "Flavor",
    "Policy",
    "default_policy",
    "parse_flavor",
    "assert_fips_mode",
    "EgressDecision",
    "EgressEngine",
    "EgressTarget",
    "check_egress",
    "ip_in_cidr",
    "narrow_for_extension",
    "normalize_target",
    "ModuleManifest",
    "TrustRoot",
    "TrustRootHolder",
    "canonical_manifest_bytes",
    "sign_manifest",
    "verify_manifest",
    "AdmissionDecision",
    "admit_extension",
    "biconditional_net_check",
    "check_module",
    "preload_module_decisions",
    "RuntimeState",
    "bootstrap",
    "get_runtime",
    "DlpFinding",
    "ScanOptions",
    "redact",
    "scan",
    "InjectionFinding",
    "detect_injection",
    "sanitize_for_prompt",
    "Envelope",
    "SecretBuffer",
    "derive_key",
    "fips_probe",
    "open_envelope",
    "seal",
    "with_secret",
    "RollbackResult",
    "TransactionBuffer",
    "TxRecord",
    "AgentSession",
    "HitlController",
    "SessionState",
    "errors",
]
