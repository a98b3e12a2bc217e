"""Flavor parsing, per-flavor policy defaults, overrides, gates."""

from __future__ import annotations

import json

import pytest

from enclawed.errors import ConfigurationError, FipsGateError
from enclawed.policy import (
    RFC1918_CIDRS,
    Flavor,
    apply_policy_overrides,
    assert_fips_mode,
    attestation_check,
    default_policy,
    load_policy_file,
    parse_flavor,
)


def test_flavor_absent_defaults_open():
    assert parse_flavor(None) is Flavor.OPEN
    assert parse_flavor("") is Flavor.OPEN
    assert parse_flavor("  ") is Flavor.OPEN


def test_flavor_aliases_case_insensitive():
    for raw in ("ENCLAVED", "enclave", "Strict"):
        assert parse_flavor(raw) is Flavor.ENCLAVED
    for raw in ("open", "DEV", "compatible"):
        assert parse_flavor(raw) is Flavor.OPEN


def test_flavor_unknown_fails_loud():
    with pytest.raises(ConfigurationError):
        parse_flavor("medium")


def test_enclaved_defaults():
    policy = default_policy(Flavor.ENCLAVED)
    assert policy.require_vpn_gateway is True
    assert policy.vpn_cidrs == RFC1918_CIDRS
    assert "172.16.0.0/12" in policy.vpn_cidrs
    assert policy.fips_required is True
    assert policy.freeze_guards is True
    assert policy.unsigned_module_action == "deny"
    assert policy.attestation_failure_action == "deny"
    assert policy.enforce_allowlists is True
    assert policy.host_allowlist == frozenset()


def test_open_defaults():
    policy = default_policy(Flavor.OPEN)
    assert policy.require_vpn_gateway is False
    assert policy.fips_required is False
    assert policy.freeze_guards is False
    assert policy.unsigned_module_action == "warn"
    assert policy.attestation_failure_action == "warn"
    assert policy.enforce_allowlists is False


def test_policy_overrides_merge(tmp_path):
    path = tmp_path / "policy.json"
    path.write_text(json.dumps({"hostAllowlist": ["Git.Example", "api.internal"], "fipsRequired": False}))
    policy = apply_policy_overrides(default_policy(Flavor.ENCLAVED), load_policy_file(str(path)))
    assert policy.host_allowlist == frozenset({"git.example", "api.internal"})
    assert policy.fips_required is False
    assert policy.require_vpn_gateway is True  # untouched default


def test_policy_unknown_key_fails_loud():
    with pytest.raises(ConfigurationError):
        apply_policy_overrides(default_policy(Flavor.OPEN), {"hostAllowList": []})


def test_policy_is_immutable():
    policy = default_policy(Flavor.ENCLAVED)
    with pytest.raises(Exception):
        policy.fips_required = False


def test_fips_gate():
    enclaved = default_policy(Flavor.ENCLAVED)
    assert_fips_mode(enclaved, probe=lambda: True)  # no raise
    with pytest.raises(FipsGateError):
        assert_fips_mode(enclaved, probe=lambda: False)
    # open default does not assert
    assert_fips_mode(default_policy(Flavor.OPEN), probe=lambda: False)


def test_attestation_check_split():
    assert attestation_check(True, default_policy(Flavor.ENCLAVED)) == "ok"
    assert attestation_check(False, default_policy(Flavor.ENCLAVED)) == "deny"
    assert attestation_check(False, default_policy(Flavor.OPEN)) == "warn"
