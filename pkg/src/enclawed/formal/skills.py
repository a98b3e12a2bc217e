"""SKILL.md manifests: fenced front-matter with the minimal field set, signed
with the same Ed25519 primitive as module manifests."""

from __future__ import annotations

import base64
import binascii
import os
from dataclasses import dataclass, replace
from typing import Any

import yaml
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

from ..canonical import canonicalize
from ..errors import ManifestError, SigningError
from ..signing import TrustRoot

SKILL_MANIFEST_FILENAME = "SKILL.md"


@dataclass(frozen=True)
class SkillManifest:
    name: str
    caps: tuple[str, ...]
    verification: str = "unverified"
    signer_key_id: str | None = None
    signature: str | None = None

    def to_front_matter(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "caps": list(self.caps),
            "verification": self.verification,
        }
        if self.signer_key_id is not None:
            out["signerKeyId"] = self.signer_key_id
        if self.signature is not None:
            out["signature"] = self.signature
        return out


def canonical_skill_bytes(manifest: SkillManifest) -> bytes:
    body = manifest.to_front_matter()
    body.pop("signature", None)
    return canonicalize(body)


def sign_skill_manifest(
    manifest: SkillManifest, private_key: ed25519.Ed25519PrivateKey, key_id: str
) -> SkillManifest:
    if not isinstance(private_key, ed25519.Ed25519PrivateKey):
        raise SigningError("private key must be an Ed25519 private key")
    unsigned = replace(manifest, signer_key_id=key_id, signature=None)
    sig = private_key.sign(canonical_skill_bytes(unsigned))
    return replace(unsigned, signature=base64.b64encode(sig).decode("ascii"))


def verify_skill_signature(manifest: SkillManifest, trust_root: TrustRoot | None) -> str | None:
    """Failure reason token, or None when the attestation signature holds."""
    if not manifest.signature or not manifest.signer_key_id:
        return "unsigned"
    signer = trust_root.signers.get(manifest.signer_key_id) if trust_root else None
    if signer is None:
        return "signer-not-authorized"
    try:
        sig = base64.b64decode(manifest.signature, validate=True)
        signer.public_key().verify(sig, canonical_skill_bytes(manifest))
    except (binascii.Error, ValueError, InvalidSignature):
        return "signature-invalid"
    return None


def _split_front_matter(text: str) -> tuple[str, str]:
    if not text.startswith("---\n") and not text.startswith("---\r\n"):
        raise ManifestError("SKILL.md must begin with a fenced front-matter block")
    lines = text.split("\n")
    for i in range(1, len(lines)):
        if lines[i].strip() == "---":
            return "\n".join(lines[1:i]), "\n".join(lines[i + 1 :])
    raise ManifestError("SKILL.md front-matter block is not closed")


def parse_skill_manifest(skill_dir: str | os.PathLike[str]) -> SkillManifest:
    path = os.path.join(os.fspath(skill_dir), SKILL_MANIFEST_FILENAME)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ManifestError(f"{path}: cannot read skill manifest: {exc}") from exc
    front, _ = _split_front_matter(text)
    try:
        raw = yaml.safe_load(front)
    except yaml.YAMLError as exc:
        raise ManifestError(f"{path}: malformed front matter: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: front matter must be a mapping")
    name = raw.get("name")
    caps = raw.get("caps")
    if not isinstance(name, str) or not name.strip():
        raise ManifestError(f"{path}: skill name missing")
    if not isinstance(caps, list) or any(not isinstance(c, str) for c in caps):
        raise ManifestError(f"{path}: caps must be a list of strings")
    return SkillManifest(
        name=name.strip(),
        caps=tuple(caps),
        verification=str(raw.get("verification", "unverified")),
        signer_key_id=raw.get("signerKeyId"),
        signature=raw.get("signature"),
    )


def write_skill_md(
    skill_dir: str | os.PathLike[str], manifest: SkillManifest, body: str = ""
) -> str:
    """Write SKILL.md with the manifest front matter; returns the path."""
    path = os.path.join(os.fspath(skill_dir), SKILL_MANIFEST_FILENAME)
    front = yaml.safe_dump(manifest.to_front_matter(), sort_keys=True).strip()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"---\n{front}\n---\n{body}")
    return path
