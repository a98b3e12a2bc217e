"""Flavor selection and enforcement policy.

The flavor is chosen once at boot and is immutable for the process lifetime:
`open` keeps audit/classification/DLP signals flowing but only warns, while
`enclaved` enforces strict deny-by-default allowlists, required signatures,
FIPS assertion, locked trust root, and frozen guards.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from typing import Callable, Mapping

from .errors import ConfigurationError, FipsGateError
from . import crypto

RFC1918_CIDRS = ("10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16")

ENV_FLAVOR = "ENCLAWED_FLAVOR"
ENV_SCHEME = "ENCLAWED_CLASSIFICATION_SCHEME"
ENV_POLICY_PATH = "ENCLAWED_POLICY_PATH"
ENV_TRUST_ROOT = "ENCLAWED_TRUST_ROOT"

_FLAVOR_ALIASES = {
    "open": "open",
    "dev": "open",
    "compatible": "open",
    "enclaved": "enclaved",
    "enclave": "enclaved",
    "strict": "enclaved",
}


class Flavor(enum.Enum):
    OPEN = "open"
    ENCLAVED = "enclaved"


def parse_flavor(raw: str | None) -> Flavor:
    """Absent or empty selects open; unknown values fail loud."""
    if raw is None or not raw.strip():
        return Flavor.OPEN
    mapped = _FLAVOR_ALIASES.get(raw.strip().lower())
    if mapped is None:
        raise ConfigurationError(
            f"unrecognized {ENV_FLAVOR} value {raw!r} (expected open/enclaved or an alias)"
        )
    return Flavor(mapped)


@dataclass(frozen=True)
class Policy:
    channel_allowlist: frozenset[str]
    provider_allowlist: frozenset[str]
    host_allowlist: frozenset[str]
    require_vpn_gateway: bool
    vpn_cidrs: tuple[str, ...]
    fips_required: bool
    freeze_guards: bool
    unsigned_module_action: str  # warn | deny
    attestation_failure_action: str  # warn | deny
    enforce_allowlists: bool


def default_policy(flavor: Flavor) -> Policy:
    if flavor is Flavor.ENCLAVED:
        return Policy(
            channel_allowlist=frozenset(),
            provider_allowlist=frozenset(),
            host_allowlist=frozenset(),
            require_vpn_gateway=True,
            vpn_cidrs=RFC1918_CIDRS,
            fips_required=True,
            freeze_guards=True,
            unsigned_module_action="deny",
            attestation_failure_action="deny",
            enforce_allowlists=True,
        )
    return Policy(
        channel_allowlist=frozenset(),
        provider_allowlist=frozenset(),
        host_allowlist=frozenset(),
        require_vpn_gateway=False,
        vpn_cidrs=(),
        fips_required=False,
        freeze_guards=False,
        unsigned_module_action="warn",
        attestation_failure_action="warn",
        enforce_allowlists=False,
    )


_OVERRIDE_KEYS: dict[str, str] = {
    "channelAllowlist": "channel_allowlist",
    "providerAllowlist": "provider_allowlist",
    "hostAllowlist": "host_allowlist",
    "requireVpnGateway": "require_vpn_gateway",
    "vpnCidrs": "vpn_cidrs",
    "fipsRequired": "fips_required",
    "freezeGuards": "freeze_guards",
    "unsignedModuleAction": "unsigned_module_action",
    "attestationFailureAction": "attestation_failure_action",
    "enforceAllowlists": "enforce_allowlists",
}


def apply_policy_overrides(policy: Policy, overrides: Mapping[str, object]) -> Policy:
    """Merge a policy document over the flavor defaults; unknown keys fail loud."""
    changes: dict[str, object] = {}
    for key, value in overrides.items():
        field = _OVERRIDE_KEYS.get(key)
        if field is None:
            raise ConfigurationError(f"unknown policy key {key!r}")
        if field in ("channel_allowlist", "provider_allowlist", "host_allowlist"):
            if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
                raise ConfigurationError(f"policy key {key!r} must be a list of strings")
            changes[field] = frozenset(v.strip().lower() for v in value)
        elif field == "vpn_cidrs":
            if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
                raise ConfigurationError(f"policy key {key!r} must be a list of strings")
            changes[field] = tuple(value)
        elif field in ("unsigned_module_action", "attestation_failure_action"):
            if value not in ("warn", "deny"):
                raise ConfigurationError(f"policy key {key!r} must be 'warn' or 'deny'")
            changes[field] = value
        else:
            if not isinstance(value, bool):
                raise ConfigurationError(f"policy key {key!r} must be a boolean")
            changes[field] = value
    return replace(policy, **changes)


def load_policy_file(path: str) -> Mapping[str, object]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"{path}: cannot load policy file: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigurationError(f"{path}: policy file must contain a JSON object")
    return document


def assert_fips_mode(policy: Policy, probe: Callable[[], bool] | None = None) -> None:
    """Fatal when the policy requires FIPS and the backend probe disagrees."""
    if not policy.fips_required:
        return
    active = (probe or crypto.fips_probe)()
    if not active:
        raise FipsGateError(
            "policy requires FIPS mode but the crypto backend probe reports non-approved"
        )


def attestation_check(peer_ok: bool, policy: Policy) -> str:
    """Pluggable peer-attestation outcome mapped by flavor policy: ok | warn | deny."""
    if peer_ok:
        return "ok"
    return policy.attestation_failure_action
