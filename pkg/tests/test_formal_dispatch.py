"""Method B: refinement dispatch boundary and the leakage bound."""

from __future__ import annotations

import math

import pytest

from enclawed.errors import RefinementError
from enclawed.formal.dispatch import (
    Envelope,
    build_refined_dispatch,
    leakage_bound,
    types_proof_document,
)
from enclawed.formal.effects import SKILL_CAPABILITIES
from enclawed.formal.skills import SkillManifest


def manifest(caps):
    return SkillManifest(name="m", caps=tuple(caps))


def test_in_manifest_dispatch_admitted():
    dispatcher = build_refined_dispatch(manifest(["fs.read"]))
    envelope = Envelope("fs.read")
    assert dispatcher.dispatch(envelope) is envelope


def test_out_of_manifest_dispatch_raises():
    dispatcher = build_refined_dispatch(manifest(["fs.read"]))
    with pytest.raises(RefinementError):
        dispatcher.dispatch(Envelope("net.egress"))


def test_unknown_token_rejected():
    dispatcher = build_refined_dispatch(manifest(["fs.read"]))
    with pytest.raises(RefinementError):
        dispatcher.dispatch(Envelope("frobnicate"))


def test_dispatcher_admits_exactly_declared_over_whole_vocabulary():
    for caps in ([], ["fs.read"], ["net.egress", "pay"], list(SKILL_CAPABILITIES)):
        dispatcher = build_refined_dispatch(manifest(caps))
        for token in SKILL_CAPABILITIES:
            assert dispatcher.admits(token) == (token in caps)
        assert not dispatcher.admits("unknown-token")


def test_dispatcher_is_frozen():
    dispatcher = build_refined_dispatch(manifest(["fs.read"]))
    with pytest.raises(Exception):
        dispatcher.caps = frozenset({"pay"})


def test_manifest_with_unknown_caps_rejected_at_build():
    with pytest.raises(RefinementError):
        build_refined_dispatch(manifest(["made.up"]))


def test_leakage_bound_formula():
    assert leakage_bound(manifest([])) == 0.0
    assert leakage_bound(manifest(["fs.read"])) == 1.0
    assert leakage_bound(manifest(["fs.read", "pay", "publish"])) == 2.0
    for d in range(0, 17):
        # the bound counts distinct declared tokens, vocabulary-agnostic
        chosen = [f"cap-{i}" for i in range(d)]
        assert leakage_bound(type("M", (), {"caps": chosen})()) == math.log2(d + 1)


def test_types_proof_document_digest_tracks_predicate():
    a = types_proof_document(build_refined_dispatch(manifest(["fs.read"])))
    b = types_proof_document(build_refined_dispatch(manifest(["fs.read", "pay"])))
    same = types_proof_document(build_refined_dispatch(manifest(["fs.read"])))
    assert a["fixtureDigest"] != b["fixtureDigest"]
    assert a["fixtureDigest"] == same["fixtureDigest"]
    assert a["predicate"]["caps"] == ["fs.read"]


def test_module_manifest_capabilities_accepted():
    from tests.conftest import base_manifest

    dispatcher = build_refined_dispatch(base_manifest(capabilities=("fs.read",)))
    assert dispatcher.admits("fs.read")
