"""Shared fixtures: keypairs, trust roots, manifest factories, module trees."""

from __future__ import annotations

import json
import os

import pytest
from cryptography.hazmat.primitives.asymmetric import ed25519

from enclawed import boot as bootstrap_mod
from enclawed.signing import (
    MANIFEST_FILENAME,
    ModuleManifest,
    Signer,
    TrustRoot,
    sign_manifest,
)


@pytest.fixture(autouse=True)
def _fresh_runtime():
    bootstrap_mod.reset_runtime_for_tests()
    yield
    bootstrap_mod.reset_runtime_for_tests()


@pytest.fixture
def keypair():
    private = ed25519.Ed25519PrivateKey.generate()
    return private, private.public_key()


@pytest.fixture
def other_keypair():
    private = ed25519.Ed25519PrivateKey.generate()
    return private, private.public_key()


def make_trust_root(*signers: tuple[str, ed25519.Ed25519PublicKey, list[str]]) -> TrustRoot:
    return TrustRoot(
        signers={
            key_id: Signer(
                key_id=key_id,
                public_key_raw=public.public_bytes_raw(),
                approved_clearances=frozenset(c.casefold() for c in clearances),
            )
            for key_id, public, clearances in signers
        }
    )


@pytest.fixture
def trust_root(keypair):
    _, public = keypair
    return make_trust_root(("signer-1", public, ["internal", "confidential", "restricted"]))


def base_manifest(**overrides) -> ModuleManifest:
    defaults = dict(
        id="ollama",
        publisher="enclawed bundled",
        version="0.1.0",
        clearance="internal",
        capabilities=("model-provider",),
        verification="tested",
    )
    defaults.update(overrides)
    return ModuleManifest(**defaults)


@pytest.fixture
def signed_manifest(keypair):
    private, _ = keypair
    return sign_manifest(base_manifest(), private, "signer-1")


def write_module_dir(root, name: str, manifest: ModuleManifest | None, package_json: bool = True):
    path = os.path.join(root, name)
    os.makedirs(path, exist_ok=True)
    if package_json:
        with open(os.path.join(path, "package.json"), "w", encoding="utf-8") as fh:
            json.dump({"name": name}, fh)
    if manifest is not None:
        with open(os.path.join(path, MANIFEST_FILENAME), "w", encoding="utf-8") as fh:
            json.dump(manifest.to_dict(), fh)
    return path
