"""Process bootstrap: flavor, scheme, policy, audit, egress engine, module
preload, trust-root lock, and the genesis audit record.

Bootstrap runs once, single-threaded, before any admission or egress decision;
the resulting RuntimeState is read-only shared state afterwards.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import admission, audit, classification, policy as policy_mod, signing
from .admission import AdmissionDecision
from .egress import EgressEngine
from .errors import (
    AdmissionFatalError,
    BootstrapError,
    ConfigurationError,
    EnclawedError,
)
from .policy import Flavor, Policy

ENV_SCHEME_ALLOWED_DIRS = "ENCLAWED_SCHEME_ALLOWED_DIRS"
GENESIS_RECORD_TYPE = "enclawed.boot"

REGISTER_DENY_CHANNEL = "module.deny.channel"
REGISTER_DENY_PROVIDER = "module.deny.provider"


@dataclass(frozen=True)
class RegistrationResult:
    allowed: bool
    warned: bool
    reasons: tuple[str, ...] = ()


@dataclass
class RuntimeState:
    flavor: Flavor
    scheme: classification.ClassificationScheme
    policy: Policy
    audit: audit.AuditLog
    egress: EgressEngine
    module_decisions: dict[str, AdmissionDecision]
    trust_root: signing.TrustRootHolder
    modules_dir: str | None = None
    attestation_hook: Callable[[], bool] | None = None
    _registered_channels: set[str] = field(default_factory=set)
    _registered_providers: set[str] = field(default_factory=set)

    def _register(self, kind: str, item_id: str, module_id: str | None) -> RegistrationResult:
        deny_type = REGISTER_DENY_CHANNEL if kind == "channel" else REGISTER_DENY_PROVIDER
        reasons: list[str] = []
        id_reason = admission.validate_module_id(item_id)
        if id_reason:
            reasons.append(id_reason)
        else:
            decision = self.module_decisions.get(module_id or item_id)
            if decision is None:
                decision = admission.check_module(None, self.flavor, self.trust_root.get(), self.scheme)
            if not decision.admitted:
                reasons.extend(decision.reasons or ("module-not-admitted",))
            allowlist = (
                self.policy.channel_allowlist if kind == "channel" else self.policy.provider_allowlist
            )
            if self.policy.enforce_allowlists and item_id.lower() not in allowlist:
                reasons.append(f"{kind}-not-allowlisted")
        if not reasons:
            (self._registered_channels if kind == "channel" else self._registered_providers).add(item_id)
            return RegistrationResult(allowed=True, warned=False)
        payload = {"id": item_id, "reasons": reasons}
        if self.flavor is Flavor.ENCLAVED:
            self.audit.append(deny_type, "registry", "", payload)
            return RegistrationResult(allowed=False, warned=False, reasons=tuple(reasons))
        # open flavor: loaded with warning, trail preserved
        self.audit.append(deny_type, "registry", "", {**payload, "warnOnly": True})
        (self._registered_channels if kind == "channel" else self._registered_providers).add(item_id)
        return RegistrationResult(allowed=True, warned=True, reasons=tuple(reasons))

    def register_channel(self, channel_id: str, module_id: str | None = None) -> RegistrationResult:
        return self._register("channel", channel_id, module_id)

    def register_provider(self, provider_id: str, module_id: str | None = None) -> RegistrationResult:
        return self._register("provider", provider_id, module_id)

    def attest_peer(self) -> str:
        """MCP peer-attestation stub hook: ok, warn, or deny per flavor policy."""
        ok = bool(self.attestation_hook()) if self.attestation_hook else False
        outcome = policy_mod.attestation_check(ok, self.policy)
        if outcome != "ok":
            self.audit.append(f"mcp.attest.{outcome}", "attestation", "", {"peerOk": ok})
        return outcome


_runtime_lock = threading.Lock()
_runtime: RuntimeState | None = None


def get_runtime() -> RuntimeState | None:
    return _runtime


def reset_runtime_for_tests() -> None:
    global _runtime
    with _runtime_lock:
        if _runtime is not None:
            _runtime.audit.close()
        _runtime = None


def bootstrap(
    env: Mapping[str, str] | None = None,
    modules_dir: str | os.PathLike[str] | None = None,
    fips_probe: Callable[[], bool] | None = None,
    attestation_hook: Callable[[], bool] | None = None,
) -> RuntimeState:
    """One-call activation; the genesis record is the first hash-chain entry.

    Order: flavor, scheme, policy defaults + overrides, FIPS gate, audit log,
    egress engine (frozen under freezeGuards), module preload, trust-root
    lock (enclaved), genesis append.
    """
    global _runtime
    source = dict(os.environ if env is None else env)
    with _runtime_lock:
        if _runtime is not None:
            raise BootstrapError("bootstrap already ran for this process")

        flavor = policy_mod.parse_flavor(source.get(policy_mod.ENV_FLAVOR))

        scheme_name = source.get(policy_mod.ENV_SCHEME, "").strip() or "enclawed-default"
        allowed_raw = source.get(ENV_SCHEME_ALLOWED_DIRS, "").strip()
        allowed_dirs = allowed_raw.split(os.pathsep) if allowed_raw else None
        scheme = classification.load_scheme_by_name(scheme_name, allowed_dirs)

        pol = policy_mod.default_policy(flavor)
        policy_path = source.get(policy_mod.ENV_POLICY_PATH, "").strip()
        if policy_path:
            pol = policy_mod.apply_policy_overrides(pol, policy_mod.load_policy_file(policy_path))

        policy_mod.assert_fips_mode(pol, fips_probe)

        audit_log = audit.AuditLog(audit.default_audit_path(source))

        engine = EgressEngine(pol, audit=audit_log, frozen=pol.freeze_guards)

        trust_holder = signing.TrustRootHolder()
        trust_path = source.get(policy_mod.ENV_TRUST_ROOT, "").strip()
        if trust_path:
            try:
                trust_holder.set(signing.load_trust_root(trust_path))
            except EnclawedError as exc:
                audit_log.close()
                if flavor is Flavor.ENCLAVED:
                    raise AdmissionFatalError(f"trust root load failed: {exc}") from exc
                raise ConfigurationError(f"trust root load failed: {exc}") from exc

        decisions: dict[str, AdmissionDecision] = {}
        if modules_dir is not None:
            try:
                decisions = admission.preload_module_decisions(
                    modules_dir, flavor, trust_holder.get(), scheme
                )
            except OSError as exc:
                if flavor is Flavor.ENCLAVED:
                    audit_log.close()
                    raise AdmissionFatalError(
                        f"modules directory {os.fspath(modules_dir)!r} unreadable: {exc}"
                    ) from exc
                audit_log.append(
                    "module.preload.warn", "bootstrap", "", {"error": str(exc)}
                )

        if flavor is Flavor.ENCLAVED:
            trust_holder.lock()

        genesis_level = classification.format_label(
            classification.make_label(0, scheme=scheme), scheme
        )
        audit_log.append(
            GENESIS_RECORD_TYPE,
            "bootstrap",
            genesis_level,
            {
                "schemeId": scheme.id,
                "flavor": flavor.value,
                "fips": pol.fips_required,
                "allowlists": {
                    "channels": sorted(pol.channel_allowlist),
                    "providers": sorted(pol.provider_allowlist),
                    "hosts": sorted(pol.host_allowlist),
                },
            },
        )

        _runtime = RuntimeState(
            flavor=flavor,
            scheme=scheme,
            policy=pol,
            audit=audit_log,
            egress=engine,
            module_decisions=decisions,
            trust_root=trust_holder,
            modules_dir=os.fspath(modules_dir) if modules_dir is not None else None,
            attestation_hook=attestation_hook,
        )
        return _runtime
