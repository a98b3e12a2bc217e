"""Manifest signing, verification conditions, forgery families, trust root."""

from __future__ import annotations

import base64
from dataclasses import replace

import pytest
from cryptography.hazmat.primitives.asymmetric import ed25519
from hypothesis import given
from hypothesis import strategies as st

from enclawed.classification import PRESET_SCHEMES
from enclawed.errors import ManifestError, TrustRootError, TrustRootLockedError
from enclawed.signing import (
    ModuleManifest,
    TrustRoot,
    TrustRootHolder,
    canonical_manifest_bytes,
    public_key_b64,
    sign_manifest,
    verify_manifest,
)
from tests.conftest import base_manifest, make_trust_root


def test_canonical_bytes_exclude_signature(keypair):
    private, _ = keypair
    signed = sign_manifest(base_manifest(), private, "signer-1")
    resigned = replace(signed, signature="different")
    assert canonical_manifest_bytes(signed) == canonical_manifest_bytes(resigned)


def test_canonical_bytes_cover_verification_and_hosts():
    a = base_manifest(verification="tested")
    b = base_manifest(verification="formal")
    assert canonical_manifest_bytes(a) != canonical_manifest_bytes(b)
    c = base_manifest(capabilities=("net.egress",), net_allowed_hosts=("x",))
    d = base_manifest(capabilities=("net.egress",), net_allowed_hosts=("y",))
    assert canonical_manifest_bytes(c) != canonical_manifest_bytes(d)


def test_signing_is_idempotent(keypair):
    private, _ = keypair
    once = sign_manifest(base_manifest(), private, "signer-1")
    twice = sign_manifest(once, private, "signer-1")
    assert once == twice


def test_sign_verify_roundtrip(keypair, trust_root):
    private, _ = keypair
    signed = sign_manifest(base_manifest(), private, "signer-1")
    assert verify_manifest(signed, trust_root).ok


def test_missing_required_field_rejected():
    with pytest.raises(ManifestError):
        ModuleManifest.from_dict({"id": "x"})


def test_required_clearance_dominance(keypair, trust_root):
    private, _ = keypair
    scheme = PRESET_SCHEMES["enclawed-default"]
    signed = sign_manifest(base_manifest(clearance="internal"), private, "signer-1")
    assert verify_manifest(signed, trust_root, scheme=scheme, required_clearance="PUBLIC").ok
    result = verify_manifest(signed, trust_root, scheme=scheme, required_clearance="RESTRICTED")
    assert not result.ok and "required-clearance-not-met" in result.reasons


# ------------------------------------------------- the seven forgery families


def test_forgery_wrong_key(other_keypair, trust_root):
    attacker_private, _ = other_keypair
    forged = sign_manifest(base_manifest(), attacker_private, "signer-1")
    result = verify_manifest(forged, trust_root)
    assert result.reasons == ("bad-signature",)


def test_forgery_signer_key_id_swap(keypair, trust_root):
    private, _ = keypair
    signed = sign_manifest(base_manifest(), private, "signer-1")
    swapped = replace(signed, signer_key_id="attacker-key")
    result = verify_manifest(swapped, trust_root)
    assert result.reasons == ("unknown-signer",)


def test_forgery_cross_module_replay(keypair, trust_root):
    private, _ = keypair
    source = sign_manifest(base_manifest(id="ollama"), private, "signer-1")
    target = replace(
        base_manifest(id="vllm"), signer_key_id=source.signer_key_id, signature=source.signature
    )
    assert verify_manifest(source, trust_root).ok  # the donor still verifies
    result = verify_manifest(target, trust_root)
    assert result.reasons == ("bad-signature",)


def test_forgery_downgrade_after_signing(keypair, trust_root):
    private, _ = keypair
    signed = sign_manifest(base_manifest(clearance="restricted"), private, "signer-1")
    downgraded = replace(signed, clearance="open-to-anyone", version="0.0.1")
    result = verify_manifest(downgraded, trust_root)
    assert "bad-signature" in result.reasons
    assert "clearance-not-approved" in result.reasons


def test_forgery_capability_injection_after_signing(keypair, trust_root):
    private, _ = keypair
    signed = sign_manifest(base_manifest(), private, "signer-1")
    injected = replace(signed, capabilities=signed.capabilities + ("net.egress",))
    result = verify_manifest(injected, trust_root)
    assert "bad-signature" in result.reasons


def test_forgery_malformed_signature(keypair, trust_root):
    private, _ = keypair
    signed = sign_manifest(base_manifest(), private, "signer-1")
    for junk in ("!!!not-base64!!!", base64.b64encode(b"short").decode()):
        result = verify_manifest(replace(signed, signature=junk), trust_root)
        assert result.reasons == ("malformed-signature",)


def test_forgery_unapproved_clearance(keypair, trust_root):
    private, _ = keypair
    signed = sign_manifest(base_manifest(clearance="sci"), private, "signer-1")
    result = verify_manifest(signed, trust_root)
    assert result.reasons == ("clearance-not-approved",)


def test_unsigned_manifest_fails(trust_root):
    result = verify_manifest(base_manifest(), trust_root)
    assert result.reasons == ("unsigned",)


def test_sign_verify_property_over_random_manifests(keypair, trust_root):
    import random

    private, _ = keypair
    rng = random.Random(7)
    caps_pool = ["model-provider", "fs.read", "tool.invoke", "publish"]
    for i in range(500):
        manifest = base_manifest(
            id=f"mod-{i}",
            publisher=f"pub-{rng.randint(0, 99)}",
            version=f"{rng.randint(0, 9)}.{rng.randint(0, 9)}.{rng.randint(0, 9)}",
            clearance=rng.choice(["internal", "confidential", "restricted"]),
            capabilities=tuple(rng.sample(caps_pool, rng.randint(0, len(caps_pool)))),
        )
        signed = sign_manifest(manifest, private, "signer-1")
        assert verify_manifest(signed, trust_root).ok


_fixed_private = ed25519.Ed25519PrivateKey.generate()
_fixed_root = make_trust_root(
    ("prop-signer", _fixed_private.public_key(), ["internal", "confidential", "restricted"])
)

_token = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd"), max_codepoint=0x7F),
    min_size=1,
    max_size=12,
)


@given(
    module_id=_token,
    publisher=st.text(max_size=20),
    version=_token,
    clearance=st.sampled_from(["internal", "confidential", "restricted"]),
    capabilities=st.lists(
        st.sampled_from(["model-provider", "fs.read", "tool.invoke", "publish"]), max_size=4
    ),
)
def test_sign_verify_property_hypothesis(module_id, publisher, version, clearance, capabilities):
    manifest = base_manifest(
        id=module_id,
        publisher=publisher,
        version=version,
        clearance=clearance,
        capabilities=tuple(capabilities),
    )
    signed = sign_manifest(manifest, _fixed_private, "prop-signer")
    assert verify_manifest(signed, _fixed_root).ok


# ------------------------------------------------- trust root lifecycle


def test_trust_root_set_reset_before_lock(trust_root):
    holder = TrustRootHolder()
    holder.set(trust_root)
    assert holder.get() is trust_root
    holder.reset()
    assert holder.get() is None


def test_trust_root_locked_mutations_raise(trust_root):
    holder = TrustRootHolder(trust_root)
    holder.lock()
    with pytest.raises(TrustRootLockedError):
        holder.set(trust_root)
    with pytest.raises(TrustRootLockedError):
        holder.reset()
    holder.lock()  # idempotent
    assert holder.get() is trust_root


def test_trust_root_document_roundtrip(keypair):
    _, public = keypair
    root = make_trust_root(("k1", public, ["internal"]))
    document = root.to_document()
    parsed = TrustRoot.from_document(document)
    assert parsed.signers["k1"].approved_clearances == frozenset({"internal"})


def test_trust_root_rejects_proto_key_id(keypair):
    _, public = keypair
    document = {
        "signers": [
            {
                "keyId": "__proto__",
                "publicKeyBase64": public_key_b64(public),
                "approvedClearances": [],
            }
        ]
    }
    with pytest.raises(TrustRootError):
        TrustRoot.from_document(document)


def test_trust_root_rejects_bad_key_material():
    document = {"signers": [{"keyId": "k", "publicKeyBase64": "zzz", "approvedClearances": []}]}
    with pytest.raises(TrustRootError):
        TrustRoot.from_document(document)
