"""Deny-by-default egress decisions.

Decisions are pure functions of (policy, target): hostname case
normalization, embedded-credential rejection, non-network scheme rejection,
literal allowlisting, VPN-only IPv4 CIDR mode, and per-extension narrowing.
The engine never resolves DNS; decisions apply to the literal URL authority.
IPv6 literals (including IPv4-mapped forms) are denied unless explicitly
allowlisted.
"""

from __future__ import annotations

import logging
import re
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING
from urllib.parse import urlsplit

from .errors import GuardFrozenError, NarrowingError, NormalizationError

if TYPE_CHECKING:  # pragma: no cover
    from .audit import AuditLog
    from .policy import Policy
    from .signing import ModuleManifest

logger = logging.getLogger(__name__)

NETWORK_SCHEMES = frozenset({"http", "https", "ws", "wss"})
_DEFAULT_PORTS = {"http": 80, "https": 443, "ws": 80, "wss": 443}
# hostnames, IPv4/IPv6 literals, and mDNS .local names; nothing else
_HOST_SHAPE = re.compile(r"^[a-z0-9._:\-]+$")

REASON_ALLOWLISTED = "allowlisted"
REASON_VPN_CIDR = "vpn-cidr"
REASON_NOT_LISTED = "denied-not-listed"
REASON_SCHEME = "denied-scheme"
REASON_CREDENTIALS = "denied-credentials"
REASON_IPV6 = "denied-ipv6"
REASON_EXTENSION_UNDECLARED = "denied-extension-undeclared"


@dataclass(frozen=True)
class EgressTarget:
    scheme: str
    host: str
    port: int
    had_credentials: bool


@dataclass(frozen=True)
class EgressDecision:
    allow: bool
    reason: str
    # False when policy is monitor-only (open flavor): the deny is advisory.
    enforced: bool = True


def normalize_target(url: str) -> EgressTarget:
    """Case-normalized authority with default ports; credentials flagged, never stored."""
    if not isinstance(url, str) or not url.strip():
        raise NormalizationError(f"not a URL: {url!r}")
    try:
        parts = urlsplit(url.strip())
        host = parts.hostname or ""
        port = parts.port
        had_credentials = parts.username is not None or parts.password is not None
    except ValueError as exc:
        raise NormalizationError(f"malformed URL {url!r}: {exc}") from exc
    scheme = parts.scheme.lower()
    if not scheme:
        raise NormalizationError(f"URL has no scheme: {url!r}")
    if scheme in NETWORK_SCHEMES and not host:
        raise NormalizationError(f"URL has no host: {url!r}")
    host = host.lower()
    if host and not _HOST_SHAPE.match(host):
        raise NormalizationError(f"URL host is malformed: {host!r}")
    if port is None:
        port = _DEFAULT_PORTS.get(scheme, 0)
    return EgressTarget(scheme=scheme, host=host, port=port, had_credentials=had_credentials)


def parse_ipv4(text: str) -> int | None:
    """Dotted-quad to 32-bit integer; None when not a well-formed IPv4 literal."""
    parts = text.split(".")
    if len(parts) != 4:
        return None
    value = 0
    for part in parts:
        if not part.isdigit() or len(part) > 3:
            return None
        if len(part) > 1 and part[0] == "0":
            return None  # reject leading zeros: octal ambiguity is deny-unsafe
        octet = int(part)
        if octet > 255:
            return None
        value = (value << 8) | octet
    return value


def parse_cidr(text: str) -> tuple[int, int] | None:
    """CIDR string to (network, prefix); None when malformed."""
    if "/" not in text:
        return None
    addr_part, _, prefix_part = text.partition("/")
    addr = parse_ipv4(addr_part.strip())
    if addr is None:
        return None
    if not prefix_part.strip().isdigit():
        return None
    prefix = int(prefix_part.strip())
    if prefix < 0 or prefix > 32:
        return None
    return addr, prefix


def ip_in_cidr(addr: str, cidr: str) -> bool:
    """True iff the address's top prefix-length bits equal the network's.

    Malformed inputs are deny-safe: False, with a parse diagnostic logged.
    """
    ip = parse_ipv4(addr.strip()) if isinstance(addr, str) else None
    if ip is None:
        logger.warning("ip_in_cidr: malformed IPv4 address %r", addr)
        return False
    net = parse_cidr(cidr.strip()) if isinstance(cidr, str) else None
    if net is None:
        logger.warning("ip_in_cidr: malformed CIDR %r", cidr)
        return False
    network, prefix = net
    if prefix == 0:
        return True
    mask = (0xFFFFFFFF << (32 - prefix)) & 0xFFFFFFFF
    return (ip & mask) == (network & mask)


def is_ipv6_literal(host: str) -> bool:
    # covers plain v6 and IPv4-mapped (::ffff:a.b.c.d) forms
    return ":" in host


@dataclass(frozen=True)
class NarrowedPolicy:
    """Deployment policy intersected with one extension's declared hosts."""

    base: "Policy"
    declared_hosts: frozenset[str]
    extension_id: str


def narrow_for_extension(policy: "Policy", manifest: "ModuleManifest") -> NarrowedPolicy:
    """Effective allowlist becomes deployment ∩ declared; requires declared hosts."""
    hosts = getattr(manifest, "net_allowed_hosts", None)
    if not hosts:
        raise NarrowingError(
            f"extension {getattr(manifest, 'id', '?')!r} has no netAllowedHosts; "
            "it should have been blocked at admission"
        )
    return NarrowedPolicy(
        base=policy,
        declared_hosts=frozenset(h.strip().lower() for h in hosts),
        extension_id=manifest.id,
    )


def check_egress(
    policy: "Policy | NarrowedPolicy",
    target: EgressTarget,
    extra_hosts: frozenset[str] = frozenset(),
) -> EgressDecision:
    """Pure decision: same (policy, target) always yields the same verdict."""
    narrowed = isinstance(policy, NarrowedPolicy)
    base = policy.base if narrowed else policy
    if target.had_credentials:
        return EgressDecision(False, REASON_CREDENTIALS)
    if target.scheme not in NETWORK_SCHEMES:
        return EgressDecision(False, REASON_SCHEME)
    host = target.host
    deployment_hosts = base.host_allowlist | extra_hosts
    effective_hosts = (
        deployment_hosts & policy.declared_hosts if narrowed else deployment_hosts
    )
    if host in effective_hosts:
        return EgressDecision(True, REASON_ALLOWLISTED)
    if narrowed and host in deployment_hosts:
        return EgressDecision(False, REASON_EXTENSION_UNDECLARED)
    if is_ipv6_literal(host):
        return EgressDecision(False, REASON_IPV6)
    if base.require_vpn_gateway and parse_ipv4(host) is not None:
        if any(ip_in_cidr(host, cidr) for cidr in base.vpn_cidrs):
            return EgressDecision(True, REASON_VPN_CIDR)
    return EgressDecision(False, REASON_NOT_LISTED)


class EgressEngine:
    """Decision engine handle installed at bootstrap.

    Immutable (locked) after an enclaved boot: runtime allowlist additions
    raise GuardFrozenError. In monitor mode (open flavor) a denied target is
    reported with enforced=False and audited as egress.warn so callers can
    proceed while still leaving a trail.
    """

    def __init__(
        self,
        policy: "Policy | NarrowedPolicy",
        audit: "AuditLog | None" = None,
        frozen: bool = False,
        actor: str = "egress",
    ):
        self._policy = policy
        self._audit = audit
        self._frozen = frozen
        self._actor = actor
        self._extra_hosts: set[str] = set()
        self._lock = threading.Lock()

    @property
    def policy(self) -> "Policy | NarrowedPolicy":
        return self._policy

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> None:
        self._frozen = True

    def add_host(self, host: str) -> None:
        """Runtime allowlist widening; refused once frozen (enclaved flavor)."""
        if self._frozen:
            raise GuardFrozenError("egress guard is frozen; runtime rule mutation refused")
        with self._lock:
            self._extra_hosts.add(host.strip().lower())

    def decide(self, url_or_target: "str | EgressTarget") -> EgressDecision:
        target = (
            url_or_target
            if isinstance(url_or_target, EgressTarget)
            else normalize_target(url_or_target)
        )
        with self._lock:  # proxy threads race admin mutations on the snapshot
            extra = frozenset(self._extra_hosts)
        return check_egress(self._policy, target, extra)

    def enforce(self, url_or_target: "str | EgressTarget") -> EgressDecision:
        """Decide, audit every deny exactly once, and mark monitor-mode denies."""
        target = (
            url_or_target
            if isinstance(url_or_target, EgressTarget)
            else normalize_target(url_or_target)
        )
        decision = self.decide(target)
        if decision.allow:
            return decision
        base = self._policy.base if isinstance(self._policy, NarrowedPolicy) else self._policy
        enforced = base.enforce_allowlists
        payload = {
            "scheme": target.scheme,
            "host": target.host,
            "port": target.port,
            "reason": decision.reason,
        }
        if self._audit is not None:
            if decision.reason == REASON_EXTENSION_UNDECLARED:
                payload["extensionId"] = self._policy.extension_id
                self._audit.append("biconditional.violation", self._actor, "", payload)
            elif enforced:
                self._audit.append("egress.deny", self._actor, "", payload)
            else:
                self._audit.append("egress.warn", self._actor, "", payload)
        return EgressDecision(decision.allow, decision.reason, enforced=enforced)

    def narrowed_for(self, manifest: "ModuleManifest") -> "EgressEngine":
        engine = EgressEngine(
            narrow_for_extension(
                self._policy.base if isinstance(self._policy, NarrowedPolicy) else self._policy,
                manifest,
            ),
            audit=self._audit,
            frozen=self._frozen,
            actor=f"extension:{manifest.id}",
        )
        engine._extra_hosts = set(self._extra_hosts)
        return engine
