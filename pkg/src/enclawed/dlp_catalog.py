"""Pattern catalog for the DLP scanner: one entry per pattern id.

The catalog is data: versioned, immutable, and testable in isolation. Every
regex is written for linear-time behavior — bounded quantifiers where a class
repeats before a required literal, no nested unbounded quantifiers — so a
1 MiB adversarial input cannot pin the CPU.

Families: markings (classification banners and caveats), secrets (cloud and
vendor credentials), pii (personal identifiers).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

CATALOG_VERSION = "2026.08"

FAMILY_MARKINGS = "markings"
FAMILY_SECRETS = "secrets"
FAMILY_PII = "pii"

SEVERITY_ORDER = {"low": 0, "medium": 1, "high": 2, "critical": 3}


@dataclass(frozen=True)
class CatalogPattern:
    id: str
    family: str
    severity: str
    regex: "re.Pattern[str]"
    note: str = ""


def _p(pid: str, family: str, severity: str, pattern: str, note: str = "") -> CatalogPattern:
    return CatalogPattern(pid, family, severity, re.compile(pattern), note)


CATALOG: tuple[CatalogPattern, ...] = (
    # --- vendor and cloud secrets: always critical ---
    _p("aws-access-key-id", FAMILY_SECRETS, "critical", r"\bAKIA[0-9A-Z]{16}\b"),
    _p(
        "gcp-service-account",
        FAMILY_SECRETS,
        "critical",
        r"\"type\"\s{0,8}:\s{0,8}\"service_account\"",
    ),
    _p("azure-storage-key", FAMILY_SECRETS, "critical", r"AccountKey=[A-Za-z0-9+/]{86}=="),
    _p("github-token", FAMILY_SECRETS, "critical", r"\bgh[pousr]_[A-Za-z0-9]{36}\b"),
    _p("gitlab-token", FAMILY_SECRETS, "critical", r"\bglpat-[A-Za-z0-9_\-]{20}\b"),
    _p(
        "openai-api-key",
        FAMILY_SECRETS,
        "critical",
        r"\bsk-(?!ant-)[A-Za-z0-9_\-]{20,512}\b",
        "negative lookahead keeps anthropic keys out of this id",
    ),
    _p("anthropic-api-key", FAMILY_SECRETS, "critical", r"\bsk-ant-[A-Za-z0-9_\-]{20,512}\b"),
    _p("slack-token", FAMILY_SECRETS, "critical", r"\bxox[baprs]-[A-Za-z0-9\-]{10,256}\b"),
    _p("stripe-secret-key", FAMILY_SECRETS, "critical", r"\b[sr]k_live_[A-Za-z0-9]{16,64}\b"),
    _p(
        "jwt",
        FAMILY_SECRETS,
        "critical",
        r"\beyJ[A-Za-z0-9_\-]{5,4096}\.[A-Za-z0-9_\-]{5,4096}\.[A-Za-z0-9_\-]{5,4096}\b",
    ),
    _p(
        "pem-private-key",
        FAMILY_SECRETS,
        "critical",
        r"-----BEGIN (?:[A-Z]{2,10} )?PRIVATE KEY-----",
        "known gap: a base64 body rewrapped without its header lines is not detected",
    ),
    # --- sensitive-data markings: high ---
    _p(
        "marking-us-banner",
        FAMILY_MARKINGS,
        "high",
        r"\b(?:TOP\s{1,4}SECRET|SECRET|CONFIDENTIAL)\s{0,4}//\s{0,4}[A-Z][A-Z0-9 ,/\-]{0,80}",
    ),
    _p("marking-top-secret", FAMILY_MARKINGS, "high", r"\bTOP\s{1,4}SECRET\b"),
    _p("marking-doe-rd", FAMILY_MARKINGS, "high", r"\bRESTRICTED\s{1,4}DATA\b"),
    _p(
        "marking-cui",
        FAMILY_MARKINGS,
        "high",
        r"\bCUI\s{0,4}//\s{0,4}[A-Z][A-Z0-9\-]{0,40}|\bCONTROLLED\s{1,4}UNCLASSIFIED\s{1,4}INFORMATION\b",
    ),
    _p(
        "marking-dist-caveat",
        FAMILY_MARKINGS,
        "high",
        r"\b(?:NOFORN|ORCON|FOUO|EYES\s{1,4}ONLY|REL\s{1,4}TO\s{1,4}[A-Z]{3})\b",
    ),
    # --- international PII ---
    _p(
        "pii-email",
        FAMILY_PII,
        "medium",
        r"\b[A-Za-z0-9._%+\-]{1,64}@[A-Za-z0-9.\-]{1,255}\.[A-Za-z]{2,24}\b",
    ),
    _p("pii-e164-phone", FAMILY_PII, "medium", r"\+[1-9]\d{7,14}\b"),
    _p(
        "pii-pan",
        FAMILY_PII,
        "high",
        r"\b(?:(?:4\d{3}|5[1-5]\d{2}|6(?:011|5\d{2}))(?:[ \-]?\d{4}){3}|3[47]\d{2}[ \-]?\d{6}[ \-]?\d{5})\b",
        "regex-only; Luhn filtering is an optional post-filter",
    ),
    _p("pii-iban", FAMILY_PII, "medium", r"\b[A-Z]{2}\d{2}[A-Z0-9]{11,30}\b"),
    _p("pii-ssn", FAMILY_PII, "high", r"\b\d{3}-\d{2}-\d{4}\b"),
)


def catalog_by_id() -> dict[str, CatalogPattern]:
    return {entry.id: entry for entry in CATALOG}
