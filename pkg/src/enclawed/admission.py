"""Flavor-dependent module admission and the biconditional net gate.

Admission never raises: every check returns a decision whose verdict is
admit, deny (enclaved), or warn (open), with one reason token per failed
condition. Preload walks the modules tree once at boot so later channel and
provider registration is a synchronous cache lookup.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .canonical import DANGEROUS_KEYS
from .classification import ClassificationScheme
from .errors import ManifestError
from .policy import Flavor
from .signing import (
    MANIFEST_FILENAME,
    ModuleManifest,
    TrustRoot,
    level_at_least,
    load_manifest,
    verify_manifest,
    verification_rank,
)

if TYPE_CHECKING:  # pragma: no cover
    from .audit import AuditLog

# Effect vocabulary for skill-style extensions plus the manifest-listing token
# used by provider modules. Unknown tokens are rejected rather than ignored.
CAPABILITY_VOCABULARY = frozenset(
    {
        "net.egress",
        "fs.read",
        "fs.write.rev",
        "fs.write.irrev",
        "tool.invoke",
        "spawn.proc",
        "publish",
        "pay",
        "mutate.schema",
        "model-provider",
    }
)

REASON_MANIFEST_ABSENT = "manifest-absent"
REASON_MANIFEST_PARSE = "manifest-parse-error"
REASON_UNKNOWN_CAPABILITY = "unknown-capability"
REASON_MISSING_NET_HOSTS = "missing-net-hosts"
REASON_NET_BELOW_TESTED = "net-verification-below-tested"
REASON_UNKNOWN_VERIFICATION = "unknown-verification"
REASON_ID_EMPTY = "id-empty"
REASON_ID_PATH_TRAVERSAL = "id-path-traversal"
REASON_ID_RESERVED = "id-reserved"


@dataclass(frozen=True)
class AdmissionDecision:
    verdict: str  # admit | deny | warn
    reasons: tuple[str, ...] = ()

    @property
    def admitted(self) -> bool:
        return self.verdict == "admit"


def validate_module_id(module_id: str) -> str | None:
    """Reason token when the id is unusable as a registry key, else None."""
    if not isinstance(module_id, str) or not module_id.strip():
        return REASON_ID_EMPTY
    if "/" in module_id or "\\" in module_id or ".." in module_id:
        return REASON_ID_PATH_TRAVERSAL
    if module_id in DANGEROUS_KEYS:
        return REASON_ID_RESERVED
    return None


def _verdict(reasons: Iterable[str], flavor: Flavor) -> AdmissionDecision:
    reason_tuple = tuple(reasons)
    if not reason_tuple:
        return AdmissionDecision("admit")
    return AdmissionDecision(
        "deny" if flavor is Flavor.ENCLAVED else "warn", reason_tuple
    )


def admit_extension(
    manifest: ModuleManifest,
    flavor: Flavor,
    trust_root: TrustRoot | None,
    scheme: ClassificationScheme | None = None,
) -> AdmissionDecision:
    """All admission conditions for a parsed manifest, reasons accumulated."""
    reasons: list[str] = []
    id_reason = validate_module_id(manifest.id)
    if id_reason:
        reasons.append(id_reason)
    unknown_caps = [c for c in manifest.capabilities if c not in CAPABILITY_VOCABULARY]
    if unknown_caps:
        reasons.append(REASON_UNKNOWN_CAPABILITY)
    if verification_rank(manifest.verification) < 0:
        reasons.append(REASON_UNKNOWN_VERIFICATION)
    declares_net = "net.egress" in manifest.capabilities
    if declares_net and not manifest.net_allowed_hosts:
        reasons.append(REASON_MISSING_NET_HOSTS)
    if declares_net and not level_at_least(manifest.verification, "tested"):
        reasons.append(REASON_NET_BELOW_TESTED)
    verification = verify_manifest(manifest, trust_root, scheme=scheme)
    reasons.extend(verification.reasons)
    if scheme is not None and scheme.rank_of(manifest.clearance) is None:
        reasons.append("unknown-clearance")
    return _verdict(reasons, flavor)


def check_module(
    manifest: ModuleManifest | None,
    flavor: Flavor,
    trust_root: TrustRoot | None,
    scheme: ClassificationScheme | None = None,
) -> AdmissionDecision:
    """Absent manifest warns (open) or denies (enclaved); present manifests get
    the full admission battery."""
    if manifest is None:
        return _verdict([REASON_MANIFEST_ABSENT], flavor)
    return admit_extension(manifest, flavor, trust_root, scheme)


def preload_module_decisions(
    root_dir: str | os.PathLike[str],
    flavor: Flavor,
    trust_root: TrustRoot | None,
    scheme: ClassificationScheme | None = None,
) -> dict[str, AdmissionDecision]:
    """One decision per direct child directory of the modules tree."""
    decisions: dict[str, AdmissionDecision] = {}
    for name in sorted(os.listdir(root_dir)):
        child = os.path.join(root_dir, name)
        if not os.path.isdir(child):
            continue
        id_reason = validate_module_id(name)
        if id_reason:
            decisions[name] = _verdict([id_reason], flavor)
            continue
        manifest_path = os.path.join(child, MANIFEST_FILENAME)
        if not os.path.exists(manifest_path):
            decisions[name] = check_module(None, flavor, trust_root, scheme)
            continue
        try:
            manifest = load_manifest(manifest_path)
        except ManifestError:
            decisions[name] = _verdict([REASON_MANIFEST_PARSE], flavor)
            continue
        decisions[name] = check_module(manifest, flavor, trust_root, scheme)
    return decisions


@dataclass(frozen=True)
class BiconditionalReport:
    violations: tuple[str, ...]  # observed but never declared: the dangerous direction
    advice: tuple[str, ...]  # declared but never observed: benign over-declaration
    clean: bool


def biconditional_net_check(
    declared: Iterable[str],
    observed: Iterable[str],
    audit: "AuditLog | None" = None,
    extension_id: str = "",
) -> BiconditionalReport:
    """Compare declared and observed host sets; S∖D is flagged, D∖S is advice."""
    d = {h.strip().lower() for h in declared}
    s = {h.strip().lower() for h in observed}
    violations = tuple(sorted(s - d))
    advice = tuple(sorted(d - s))
    if audit is not None:
        for host in violations:
            audit.append(
                "biconditional.violation",
                f"extension:{extension_id}" if extension_id else "biconditional-check",
                "",
                {"host": host, "extensionId": extension_id},
            )
    return BiconditionalReport(violations=violations, advice=advice, clean=not violations)


@dataclass(frozen=True)
class BundleCounts:
    signed: int
    gated: int
    no_metadata: int
    per_module: tuple[tuple[str, str], ...]  # (id, category)


def bundle_report(
    root_dir: str | os.PathLike[str],
    trust_root: TrustRoot | None,
    scheme: ClassificationScheme | None = None,
) -> BundleCounts:
    """Signed vs gated-unsigned vs no-metadata counts over a module tree.

    A directory with a verifying manifest is signed; one with plugin metadata
    (package.json) but no verifying manifest is gated; one with neither is a
    utility directory with no plugin metadata.
    """
    signed = gated = bare = 0
    rows: list[tuple[str, str]] = []
    for name in sorted(os.listdir(root_dir)):
        child = os.path.join(root_dir, name)
        if not os.path.isdir(child):
            continue
        manifest_path = os.path.join(child, MANIFEST_FILENAME)
        has_plugin_metadata = os.path.exists(os.path.join(child, "package.json"))
        category = "no-metadata"
        if os.path.exists(manifest_path):
            try:
                manifest = load_manifest(manifest_path)
                ok = verify_manifest(manifest, trust_root, scheme=scheme).ok
            except ManifestError:
                ok = False
            category = "signed" if ok else "gated"
        elif has_plugin_metadata:
            category = "gated"
        if category == "signed":
            signed += 1
        elif category == "gated":
            gated += 1
        else:
            bare += 1
        rows.append((name, category))
    return BundleCounts(signed=signed, gated=gated, no_metadata=bare, per_module=tuple(rows))
