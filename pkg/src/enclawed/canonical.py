"""Canonical JSON encoding and deep string sanitization.

One encoder is shared by the audit chain, the transaction buffer, manifest
signing, and the formal-evidence bundle, so every hash in the system is
computed over the same byte discipline: UTF-8, sorted keys, no insignificant
whitespace, dangerous keys dropped, non-finite numbers rejected.
"""

from __future__ import annotations

import json
import re
from typing import Any

from .errors import CanonicalizationError

# Keys that could smuggle prototype-pollution shapes into hashed material.
DANGEROUS_KEYS = frozenset({"__proto__", "constructor", "prototype"})

_C0_CONTROLS = re.compile(r"[\x00-\x1f]")
REPLACEMENT = "\ufffd"


def _clean(value: Any, seen: set[int]) -> Any:
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise CanonicalizationError(f"non-finite number: {value!r}")
        # JSON has one number type; an integral float encodes as its integer.
        return int(value) if value.is_integer() else value
    if isinstance(value, (list, tuple)):
        vid = id(value)
        if vid in seen:
            raise CanonicalizationError("cyclic structure")
        seen.add(vid)
        try:
            return [_clean(item, seen) for item in value]
        finally:
            seen.discard(vid)
    if isinstance(value, dict):
        vid = id(value)
        if vid in seen:
            raise CanonicalizationError("cyclic structure")
        seen.add(vid)
        try:
            out = {}
            for key, item in value.items():
                if not isinstance(key, str):
                    raise CanonicalizationError(f"non-string map key: {key!r}")
                if key in DANGEROUS_KEYS:
                    continue
                out[key] = _clean(item, seen)
            return out
        finally:
            seen.discard(vid)
    raise CanonicalizationError(f"uncanonicalizable type: {type(value).__name__}")


def canonicalize(value: Any) -> bytes:
    """Deterministic UTF-8 bytes for a structured value.

    Map keys are sorted; __proto__/constructor/prototype are dropped at every
    depth; non-finite numbers and cycles raise CanonicalizationError.
    """
    cleaned = _clean(value, set())
    try:
        text = json.dumps(
            cleaned,
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
            allow_nan=False,
        )
    except ValueError as exc:  # pragma: no cover - _clean rejects these first
        raise CanonicalizationError(str(exc)) from exc
    return text.encode("utf-8")


def sha256_hex(value: Any) -> str:
    """Hex SHA-256 of the canonical encoding."""
    import hashlib

    return hashlib.sha256(canonicalize(value)).hexdigest()


def deep_sanitize(value: Any) -> Any:
    """Replace C0 control characters (0x00-0x1F, TAB included) with U+FFFD.

    Applies to every string in the structure, keys included, so the on-disk
    audit bytes can never contain a raw newline smuggled via a payload.
    """
    if isinstance(value, str):
        return _C0_CONTROLS.sub(REPLACEMENT, value)
    if isinstance(value, (list, tuple)):
        return [deep_sanitize(item) for item in value]
    if isinstance(value, dict):
        return {
            deep_sanitize(key) if isinstance(key, str) else key: deep_sanitize(item)
            for key, item in value.items()
        }
    return value
