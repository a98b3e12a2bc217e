"""Ed25519 manifest signing and the clearance-aware trust root.

The signature covers a stable canonical encoding of the manifest body
excluding the signature itself, so signing is idempotent and any post-signing
field change (version, clearance, capabilities, verification,
netAllowedHosts) invalidates it. The trust root binds each signer key to the
clearance tiers it may attest and can be locked against post-boot mutation.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
from dataclasses import dataclass, replace
from typing import Any, Mapping

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ed25519

from .canonical import DANGEROUS_KEYS, canonicalize
from .classification import ClassificationScheme
from .errors import (
    ManifestError,
    SigningError,
    TrustRootError,
    TrustRootLockedError,
)

MANIFEST_FILENAME = "enclawed.module.json"
VERIFICATION_LEVELS = ("unverified", "declared", "tested", "formal")

REASON_UNSIGNED = "unsigned"
REASON_UNKNOWN_SIGNER = "unknown-signer"
REASON_CLEARANCE_NOT_APPROVED = "clearance-not-approved"
REASON_MALFORMED_SIGNATURE = "malformed-signature"
REASON_BAD_SIGNATURE = "bad-signature"
REASON_REQUIRED_CLEARANCE = "required-clearance-not-met"
REASON_UNKNOWN_CLEARANCE = "unknown-clearance"


def verification_rank(level: str) -> int:
    try:
        return VERIFICATION_LEVELS.index(level)
    except ValueError:
        return -1


def level_at_least(level: str, floor: str) -> bool:
    return verification_rank(level) >= verification_rank(floor)


@dataclass(frozen=True)
class ModuleManifest:
    id: str
    publisher: str
    version: str
    clearance: str
    capabilities: tuple[str, ...]
    v: int = 1
    verification: str = "unverified"
    net_allowed_hosts: tuple[str, ...] | None = None
    signer_key_id: str | None = None
    signature: str | None = None

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ModuleManifest":
        if not isinstance(raw, Mapping):
            raise ManifestError("manifest must be an object")
        for field_name in ("v", "id", "publisher", "version", "clearance", "capabilities"):
            if field_name not in raw:
                raise ManifestError(f"manifest missing required field {field_name!r}")
        if not isinstance(raw["id"], str) or not isinstance(raw["clearance"], str):
            raise ManifestError("manifest id and clearance must be strings")
        caps = raw["capabilities"]
        if not isinstance(caps, list) or any(not isinstance(c, str) for c in caps):
            raise ManifestError("capabilities must be a list of strings")
        hosts = raw.get("netAllowedHosts")
        if hosts is not None and (
            not isinstance(hosts, list) or any(not isinstance(h, str) for h in hosts)
        ):
            raise ManifestError("netAllowedHosts must be a list of strings")
        verification = raw.get("verification", "unverified")
        if not isinstance(verification, str):
            raise ManifestError("verification must be a string")
        return cls(
            v=raw["v"],
            id=raw["id"],
            publisher=str(raw["publisher"]),
            version=str(raw["version"]),
            clearance=raw["clearance"],
            capabilities=tuple(caps),
            verification=verification,
            net_allowed_hosts=tuple(hosts) if hosts is not None else None,
            signer_key_id=raw.get("signerKeyId"),
            signature=raw.get("signature"),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "v": self.v,
            "id": self.id,
            "publisher": self.publisher,
            "version": self.version,
            "clearance": self.clearance,
            "capabilities": list(self.capabilities),
            "verification": self.verification,
        }
        if self.net_allowed_hosts is not None:
            out["netAllowedHosts"] = list(self.net_allowed_hosts)
        if self.signer_key_id is not None:
            out["signerKeyId"] = self.signer_key_id
        if self.signature is not None:
            out["signature"] = self.signature
        return out


def load_manifest(path: str | os.PathLike[str]) -> ModuleManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{os.fspath(path)}: cannot load manifest: {exc}") from exc
    return ModuleManifest.from_dict(raw)


def canonical_manifest_bytes(manifest: ModuleManifest) -> bytes:
    """Canonical encoding of everything except the signature."""
    body = manifest.to_dict()
    body.pop("signature", None)
    return canonicalize(body)


def generate_keypair() -> tuple[ed25519.Ed25519PrivateKey, ed25519.Ed25519PublicKey]:
    private = ed25519.Ed25519PrivateKey.generate()
    return private, private.public_key()


def save_private_key(key: ed25519.Ed25519PrivateKey, path: str) -> None:
    pem = key.private_bytes(
        encoding=serialization.Encoding.PEM,
        format=serialization.PrivateFormat.PKCS8,
        encryption_algorithm=serialization.NoEncryption(),
    )
    with open(path, "wb") as fh:
        fh.write(pem)


def load_private_key(path: str) -> ed25519.Ed25519PrivateKey:
    try:
        with open(path, "rb") as fh:
            key = serialization.load_pem_private_key(fh.read(), password=None)
    except (OSError, ValueError) as exc:
        raise SigningError(f"{path}: cannot load private key: {exc}") from exc
    if not isinstance(key, ed25519.Ed25519PrivateKey):
        raise SigningError(f"{path}: not an Ed25519 private key")
    return key


def public_key_b64(public: ed25519.Ed25519PublicKey) -> str:
    raw = public.public_bytes(
        encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw
    )
    return base64.b64encode(raw).decode("ascii")


def sign_manifest(
    manifest: ModuleManifest, private_key: ed25519.Ed25519PrivateKey, key_id: str
) -> ModuleManifest:
    """Set signerKeyId and signature; re-signing replaces, never nests."""
    if not isinstance(private_key, ed25519.Ed25519PrivateKey):
        raise SigningError("private key must be an Ed25519 private key")
    unsigned = replace(manifest, signer_key_id=key_id, signature=None)
    sig = private_key.sign(canonical_manifest_bytes(unsigned))
    return replace(unsigned, signature=base64.b64encode(sig).decode("ascii"))


@dataclass(frozen=True)
class Signer:
    key_id: str
    public_key_raw: bytes
    approved_clearances: frozenset[str]  # casefolded level names

    def public_key(self) -> ed25519.Ed25519PublicKey:
        return ed25519.Ed25519PublicKey.from_public_bytes(self.public_key_raw)


@dataclass(frozen=True)
class TrustRoot:
    signers: Mapping[str, Signer]

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "TrustRoot":
        if not isinstance(document, Mapping):
            raise TrustRootError("trust root document must be an object")
        entries = document.get("signers")
        if not isinstance(entries, list):
            raise TrustRootError("trust root document needs a 'signers' list")
        signers: dict[str, Signer] = {}
        for entry in entries:
            if not isinstance(entry, Mapping):
                raise TrustRootError("each signer must be an object")
            key_id = entry.get("keyId")
            if not isinstance(key_id, str) or not key_id.strip():
                raise TrustRootError("signer keyId missing")
            if key_id in DANGEROUS_KEYS:
                raise TrustRootError(f"signer keyId {key_id!r} is a reserved name")
            try:
                raw = base64.b64decode(entry.get("publicKeyBase64", ""), validate=True)
                ed25519.Ed25519PublicKey.from_public_bytes(raw)
            except (binascii.Error, ValueError, TypeError) as exc:
                raise TrustRootError(f"signer {key_id!r}: bad public key: {exc}") from exc
            clearances = entry.get("approvedClearances", [])
            if not isinstance(clearances, list) or any(
                not isinstance(c, str) for c in clearances
            ):
                raise TrustRootError(f"signer {key_id!r}: approvedClearances must be strings")
            if key_id in signers:
                raise TrustRootError(f"duplicate signer keyId {key_id!r}")
            signers[key_id] = Signer(
                key_id=key_id,
                public_key_raw=raw,
                approved_clearances=frozenset(c.casefold() for c in clearances),
            )
        return cls(signers=signers)

    def to_document(self) -> dict[str, Any]:
        return {
            "signers": [
                {
                    "keyId": s.key_id,
                    "publicKeyBase64": base64.b64encode(s.public_key_raw).decode("ascii"),
                    "approvedClearances": sorted(s.approved_clearances),
                }
                for s in self.signers.values()
            ]
        }


def load_trust_root(path: str) -> TrustRoot:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise TrustRootError(f"{path}: cannot load trust root: {exc}") from exc
    return TrustRoot.from_document(document)


class TrustRootHolder:
    """Write-once-then-locked slot for the process trust root."""

    def __init__(self, root: TrustRoot | None = None):
        self._root = root
        self._locked = False

    @property
    def locked(self) -> bool:
        return self._locked

    def get(self) -> TrustRoot | None:
        return self._root

    def set(self, root: TrustRoot) -> None:
        if self._locked:
            raise TrustRootLockedError("setTrustRoot after lock")
        self._root = root

    def reset(self) -> None:
        if self._locked:
            raise TrustRootLockedError("resetTrustRoot after lock")
        self._root = None

    def lock(self) -> None:
        # idempotent
        self._locked = True


@dataclass(frozen=True)
class ManifestVerification:
    ok: bool
    reasons: tuple[str, ...]


def verify_manifest(
    manifest: ModuleManifest,
    trust_root: TrustRoot | None,
    scheme: ClassificationScheme | None = None,
    required_clearance: str | None = None,
) -> ManifestVerification:
    """Four-condition check: signer resolves, signer approved for the declared
    clearance, signature verifies over the canonical bytes, and any
    caller-required clearance is met by rank dominance in the active scheme."""
    reasons: list[str] = []
    if not manifest.signature or not manifest.signer_key_id:
        reasons.append(REASON_UNSIGNED)
        return ManifestVerification(False, tuple(reasons))
    signer = trust_root.signers.get(manifest.signer_key_id) if trust_root else None
    if signer is None:
        reasons.append(REASON_UNKNOWN_SIGNER)
    else:
        if manifest.clearance.casefold() not in signer.approved_clearances:
            reasons.append(REASON_CLEARANCE_NOT_APPROVED)
        try:
            sig = base64.b64decode(manifest.signature, validate=True)
            if len(sig) != 64:
                raise ValueError("signature must be 64 bytes")
        except (binascii.Error, ValueError, TypeError):
            reasons.append(REASON_MALFORMED_SIGNATURE)
        else:
            try:
                signer.public_key().verify(sig, canonical_manifest_bytes(manifest))
            except InvalidSignature:
                reasons.append(REASON_BAD_SIGNATURE)
    if required_clearance is not None:
        if scheme is None:
            raise ManifestError("required_clearance check needs the active scheme")
        have = scheme.rank_of(manifest.clearance)
        need = scheme.rank_of(required_clearance)
        if have is None:
            reasons.append(REASON_UNKNOWN_CLEARANCE)
        elif need is None:
            raise ManifestError(f"unknown required clearance {required_clearance!r}")
        elif have < need:
            reasons.append(REASON_REQUIRED_CLEARANCE)
    return ManifestVerification(not reasons, tuple(reasons))
