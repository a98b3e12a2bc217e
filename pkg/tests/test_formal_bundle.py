"""Proof-carrying bundle: sign, re-check, drift, tamper, producer independence."""

from __future__ import annotations

import json
import os
import shutil

import pytest

from enclawed.formal.bundle import (
    ATTEST_FILE,
    BUNDLE_FILES,
    SMT_FILE,
    STATIC_FILE,
    instance_hash,
    sign_bundle,
    verify_formal_bundle,
)
from enclawed.formal.skills import (
    SkillManifest,
    parse_skill_manifest,
    sign_skill_manifest,
    write_skill_md,
)
from tests.conftest import make_trust_root


@pytest.fixture
def skill_dir(tmp_path, keypair):
    private, _ = keypair
    skill = tmp_path / "skill"
    skill.mkdir()
    manifest = SkillManifest(name="demo-skill", caps=("fs.read", "spawn.proc"), verification="tested")
    signed = sign_skill_manifest(manifest, private, "signer-1")
    write_skill_md(skill, signed, body="# demo skill\n")
    (skill / "reader.py").write_text("data = open('notes.txt').read()\n")
    (skill / "runner.sh").write_text("python3 reader.py\n")
    return skill


@pytest.fixture
def skill_trust_root(keypair):
    _, public = keypair
    return make_trust_root(("signer-1", public, ["internal"]))


def test_skill_manifest_roundtrip(skill_dir):
    manifest = parse_skill_manifest(skill_dir)
    assert manifest.name == "demo-skill"
    assert manifest.caps == ("fs.read", "spawn.proc")
    assert manifest.signature


def test_sign_then_verify_unchanged_passes(tmp_path, skill_dir, keypair, skill_trust_root):
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    for name in BUNDLE_FILES:
        assert os.path.exists(os.path.join(bundle, name))
    result = verify_formal_bundle(bundle, skill_dir, skill_trust_root)
    assert result.ok and result.reasons == ()


def test_script_edit_after_signing_is_method_a_cache_miss(
    tmp_path, skill_dir, keypair, skill_trust_root
):
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    # one-byte edit that does not even change the effect set
    (skill_dir / "reader.py").write_text("data = open('notes.txb').read()\n")
    result = verify_formal_bundle(bundle, skill_dir, skill_trust_root)
    assert not result.ok
    assert "method-a-cache-miss" in result.reasons


def test_manifest_caps_change_is_method_b_and_c_cache_miss(
    tmp_path, skill_dir, keypair, skill_trust_root
):
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    manifest = parse_skill_manifest(skill_dir)
    widened = sign_skill_manifest(
        SkillManifest(name=manifest.name, caps=manifest.caps + ("pay",), verification="tested"),
        private,
        "signer-1",
    )
    write_skill_md(skill_dir, widened, body="# demo skill\n")
    result = verify_formal_bundle(bundle, skill_dir, skill_trust_root)
    assert "method-b-cache-miss" in result.reasons
    assert "method-c-cache-miss" in result.reasons


def test_signer_not_in_trust_root_rejected(tmp_path, skill_dir, keypair, other_keypair):
    private, _ = keypair
    _, other_public = other_keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    wrong_root = make_trust_root(("someone-else", other_public, ["internal"]))
    result = verify_formal_bundle(bundle, skill_dir, wrong_root)
    assert "signer-not-authorized" in result.reasons


def test_tampered_attestation_signature(tmp_path, skill_dir, keypair, other_keypair, skill_trust_root):
    private, _ = keypair
    attacker, _ = other_keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    attest_path = os.path.join(bundle, ATTEST_FILE)
    with open(attest_path) as fh:
        attest = json.load(fh)
    attest["skill"] = "renamed-skill"
    with open(attest_path, "w") as fh:
        json.dump(attest, fh)
    result = verify_formal_bundle(bundle, skill_dir, skill_trust_root)
    assert "signature-invalid" in result.reasons


def test_tampered_evidence_file_detected(tmp_path, skill_dir, keypair, skill_trust_root):
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    static_path = os.path.join(bundle, STATIC_FILE)
    with open(static_path) as fh:
        static_doc = json.load(fh)
    static_doc["contained"] = True
    static_doc["union"] = []
    with open(static_path, "w") as fh:
        json.dump(static_doc, fh)
    result = verify_formal_bundle(bundle, skill_dir, skill_trust_root)
    assert "evidence-tampered" in result.reasons


def test_missing_evidence_file(tmp_path, skill_dir, keypair, skill_trust_root):
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    os.remove(os.path.join(bundle, SMT_FILE))
    result = verify_formal_bundle(bundle, skill_dir, skill_trust_root)
    assert result.reasons == ("missing-evidence-file",)


def test_verification_is_producer_independent(tmp_path, skill_dir, keypair, skill_trust_root):
    """Only (bundle, skillDir, trustRoot) are needed: move both and re-verify."""
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle")
    relocated_skill = tmp_path / "relocated-skill"
    relocated_bundle = tmp_path / "relocated-bundle"
    shutil.copytree(skill_dir, relocated_skill)
    shutil.copytree(bundle, relocated_bundle)
    shutil.rmtree(skill_dir)
    shutil.rmtree(bundle)
    result = verify_formal_bundle(relocated_bundle, relocated_skill, skill_trust_root)
    assert result.ok


def test_instance_hash_stable_and_byte_sensitive(tmp_path, skill_dir):
    first = instance_hash(skill_dir)
    second = instance_hash(skill_dir)
    assert first == second
    script = skill_dir / "reader.py"
    original = script.read_text()
    script.write_text(original[:-1] + "#")
    assert instance_hash(skill_dir) != first


def test_smt_evidence_serializes_bmc_verdict(tmp_path, skill_dir, keypair):
    private, _ = keypair
    bundle = sign_bundle(skill_dir, private, "signer-1", tmp_path / "bundle", bmc_bound=3)
    with open(os.path.join(bundle, SMT_FILE)) as fh:
        smt = json.load(fh)
    assert smt["bound"] == 3
    assert smt["alphabetSize"] == 3  # |D|=2 caps + noop
    assert smt["tracesExplored"] == 27
    assert smt["violationCounts"] == {}
