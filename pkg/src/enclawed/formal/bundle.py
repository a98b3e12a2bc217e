"""Proof-carrying bundle: sign the three methods' evidence, re-check at load.

The bundle is four files — static.json, types.proof.json, smt.unsat.json,
manifest.attest.json — each hashed with the canonical encoding; the
attestation signs all four hashes (three evidence documents plus the
instance hash binding the skill source snapshot). Verification never trusts
the producer: all three methods are re-run on the live source and compared
hash-for-hash, so any drift aborts with a per-method cache-miss reason.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any

from cryptography.hazmat.primitives.asymmetric import ed25519

from ..canonical import canonicalize
from ..errors import BmcBoundError, ManifestError, SigningError
from ..signing import TrustRoot
from .bmc import DEFAULT_TRACE_CEILING, bmc
from .dispatch import build_refined_dispatch, types_proof_document
from .skills import SkillManifest, parse_skill_manifest, verify_skill_signature
from .static_scan import analyze_scripts

STATIC_FILE = "static.json"
TYPES_FILE = "types.proof.json"
SMT_FILE = "smt.unsat.json"
ATTEST_FILE = "manifest.attest.json"
BUNDLE_FILES = (STATIC_FILE, TYPES_FILE, SMT_FILE, ATTEST_FILE)

DEFAULT_BUNDLE_BMC_BOUND = 4

REASON_MISSING_FILE = "missing-evidence-file"
REASON_ATTEST_PARSE = "attest-parse-error"
REASON_SIGNER = "signer-not-authorized"
REASON_SIGNATURE = "signature-invalid"
REASON_TAMPERED = "evidence-tampered"
REASON_METHOD_A = "method-a-cache-miss"
REASON_METHOD_B = "method-b-cache-miss"
REASON_METHOD_C = "method-c-cache-miss"
REASON_INSTANCE = "instance-hash-mismatch"
REASON_BMC_BOUND = "bmc-bound-exceeded"


def _doc_hash(document: Any) -> str:
    return hashlib.sha256(canonicalize(document)).hexdigest()


def instance_hash(skill_dir: str | os.PathLike[str]) -> str:
    """Binds the whole source snapshot: any byte change anywhere changes it."""
    root = os.fspath(skill_dir)
    files: dict[str, str] = {}
    for dirpath, _dirnames, filenames in os.walk(root):
        for filename in sorted(filenames):
            full = os.path.join(dirpath, filename)
            rel = os.path.relpath(full, root).replace(os.sep, "/")
            with open(full, "rb") as fh:
                files[rel] = hashlib.sha256(fh.read()).hexdigest()
    return _doc_hash(files)


def produce_evidence(
    skill_dir: str | os.PathLike[str],
    manifest: SkillManifest | None = None,
    bmc_bound: int = DEFAULT_BUNDLE_BMC_BOUND,
    trace_ceiling: int = DEFAULT_TRACE_CEILING,
) -> tuple[dict[str, Any], dict[str, Any], dict[str, Any], SkillManifest]:
    if manifest is None:
        manifest = parse_skill_manifest(skill_dir)
    static_doc = analyze_scripts(skill_dir, manifest).to_json_dict()
    types_doc = types_proof_document(build_refined_dispatch(manifest))
    smt_doc = bmc(manifest, k=bmc_bound, trace_ceiling=trace_ceiling).to_json_dict()
    return static_doc, types_doc, smt_doc, manifest


def sign_bundle(
    skill_dir: str | os.PathLike[str],
    private_key: ed25519.Ed25519PrivateKey,
    key_id: str,
    out_dir: str | os.PathLike[str],
    bmc_bound: int = DEFAULT_BUNDLE_BMC_BOUND,
    trace_ceiling: int = DEFAULT_TRACE_CEILING,
) -> str:
    """Run the three methods, write the four-file bundle, return its path."""
    if not isinstance(private_key, ed25519.Ed25519PrivateKey):
        raise SigningError("private key must be an Ed25519 private key")
    static_doc, types_doc, smt_doc, manifest = produce_evidence(
        skill_dir, bmc_bound=bmc_bound, trace_ceiling=trace_ceiling
    )
    out = os.fspath(out_dir)
    os.makedirs(out, exist_ok=True)
    attest: dict[str, Any] = {
        "v": 1,
        "skill": manifest.name,
        "bmcBound": bmc_bound,
        "instanceHash": instance_hash(skill_dir),
        "evidenceHashes": {
            STATIC_FILE: _doc_hash(static_doc),
            TYPES_FILE: _doc_hash(types_doc),
            SMT_FILE: _doc_hash(smt_doc),
        },
        "signerKeyId": key_id,
    }
    signature = private_key.sign(canonicalize(attest))
    attest["signature"] = base64.b64encode(signature).decode("ascii")
    for name, document in (
        (STATIC_FILE, static_doc),
        (TYPES_FILE, types_doc),
        (SMT_FILE, smt_doc),
        (ATTEST_FILE, attest),
    ):
        with open(os.path.join(out, name), "wb") as fh:
            fh.write(canonicalize(document))
    return out


@dataclass(frozen=True)
class BundleVerifyResult:
    ok: bool
    reasons: tuple[str, ...] = ()
    details: dict[str, Any] = field(default_factory=dict)


def verify_formal_bundle(
    bundle_dir: str | os.PathLike[str],
    skill_dir: str | os.PathLike[str],
    trust_root: TrustRoot | None,
    trace_ceiling: int = DEFAULT_TRACE_CEILING,
) -> BundleVerifyResult:
    """Producer-independent re-check from only (bundle, skillDir, trustRoot)."""
    bundle = os.fspath(bundle_dir)
    docs: dict[str, Any] = {}
    reasons: list[str] = []
    for name in BUNDLE_FILES:
        path = os.path.join(bundle, name)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                docs[name] = json.load(fh)
        except (OSError, json.JSONDecodeError):
            reasons.append(REASON_MISSING_FILE)
            return BundleVerifyResult(False, tuple(reasons), {"file": name})
    attest = docs[ATTEST_FILE]
    if not isinstance(attest, dict) or "evidenceHashes" not in attest or "signature" not in attest:
        return BundleVerifyResult(False, (REASON_ATTEST_PARSE,))

    # attestation signature over everything but the signature itself
    signer_key_id = attest.get("signerKeyId")
    signer = trust_root.signers.get(signer_key_id) if trust_root else None
    if signer is None:
        reasons.append(REASON_SIGNER)
    else:
        body = {k: v for k, v in attest.items() if k != "signature"}
        try:
            sig = base64.b64decode(attest["signature"], validate=True)
            signer.public_key().verify(sig, canonicalize(body))
        except Exception:  # noqa: BLE001 - any failure is the same verdict
            reasons.append(REASON_SIGNATURE)

    # stored evidence must still match the attested hashes (tamper check)
    attested = attest.get("evidenceHashes", {})
    for name in (STATIC_FILE, TYPES_FILE, SMT_FILE):
        if _doc_hash(docs[name]) != attested.get(name):
            reasons.append(REASON_TAMPERED)
            break

    # re-run all three methods on the live source; drift is a cache miss
    try:
        manifest = parse_skill_manifest(skill_dir)
    except ManifestError:
        reasons.append(REASON_METHOD_A)
        return BundleVerifyResult(False, tuple(dict.fromkeys(reasons)))
    bound = int(attest.get("bmcBound", DEFAULT_BUNDLE_BMC_BOUND))
    try:
        fresh_static, fresh_types, fresh_smt, _ = produce_evidence(
            skill_dir, manifest=manifest, bmc_bound=bound, trace_ceiling=trace_ceiling
        )
    except BmcBoundError:
        reasons.append(REASON_BMC_BOUND)
        return BundleVerifyResult(False, tuple(dict.fromkeys(reasons)))
    if _doc_hash(fresh_static) != attested.get(STATIC_FILE):
        reasons.append(REASON_METHOD_A)
    if _doc_hash(fresh_types) != attested.get(TYPES_FILE):
        reasons.append(REASON_METHOD_B)
    if _doc_hash(fresh_smt) != attested.get(SMT_FILE):
        reasons.append(REASON_METHOD_C)
    if instance_hash(skill_dir) != attest.get("instanceHash"):
        reasons.append(REASON_INSTANCE)

    unique = tuple(dict.fromkeys(reasons))
    details = {
        "skill": attest.get("skill"),
        "signatureReason": verify_skill_signature(manifest, trust_root),
    }
    return BundleVerifyResult(not unique, unique, details)
