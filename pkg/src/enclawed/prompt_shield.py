"""Sanitization of untrusted text bound for model prompts, plus
injection-pattern detection.

sanitize_for_prompt applies five operations in order: C0 control replacement
(TAB survives), bidi-override stripping, zero-width stripping, role-boundary
neutralization, and code-fence neutralization. Detection is separate and
never mutates. This is the data-sanitization layer only; it does not claim to
be a complete prompt-injection defense.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

FINDING_ROLE_SPOOF = "role-spoof"
FINDING_BIDI = "bidi"
FINDING_ZERO_WIDTH = "zero-width"
FINDING_CONTROL_CHARS = "control-chars"
FINDING_FENCE_BREAKOUT = "fence-breakout"
FINDING_IMPERATIVE_OVERRIDE = "imperative-override"

USER_CONTENT_MARKER = "[USER-CONTENT]"
FENCE_GUARD = "\u2060"  # word joiner: survives a second sanitize pass by design

# C0 range excluding TAB (0x09); LF and CR are control signals here too.
_C0_NO_TAB = re.compile(r"[\x00-\x08\x0a-\x1f]")
_BIDI = re.compile(r"[\u202a-\u202e\u2066-\u2069]")
_ZERO_WIDTH = re.compile(r"[\u200b-\u200d\u2060\ufeff]")

ROLE_TOKENS = ("system", "assistant", "user", "tool", "function")
# optional leading whitespace or Markdown emphasis (runs of * _ ~ >) before a role token
_ROLE_LINE = re.compile(
    r"^[\s*_~>]*(?:" + "|".join(ROLE_TOKENS) + r"):", re.IGNORECASE
)

_FENCE_LINE = "```"

_OVERRIDE_VERBS = frozenset({"IGNORE", "OVERRIDE", "DISREGARD", "FORGET"})
_OVERRIDE_QUALIFIERS = frozenset({"previous", "above", "prior", "all"})
_OVERRIDE_NOUNS = frozenset({"instructions", "messages", "rules"})
_WORD = re.compile(r"[A-Za-z]+")


@dataclass(frozen=True)
class InjectionFinding:
    id: str
    span: tuple[int, int] | None = None


def _strip_zero_width_keep_fence_guards(text: str) -> str:
    # A lone word joiner immediately before a fence line is our own step-5
    # marker from an earlier pass; stripping it would break idempotency.
    lines = text.split("\n")
    out = []
    for line in lines:
        if line == FENCE_GUARD + _FENCE_LINE:
            out.append(line)
        else:
            out.append(_ZERO_WIDTH.sub("", line))
    return "\n".join(out)


def sanitize_for_prompt(text: str) -> str:
    """Five ordered operations; idempotent: sanitize(sanitize(x)) == sanitize(x)."""
    if not isinstance(text, str):
        raise TypeError(f"expected str, got {type(text).__name__}")
    # 1. C0 controls (excluding TAB) -> U+FFFD
    text = _C0_NO_TAB.sub("\ufffd", text)
    # 2. strip bidi overrides
    text = _BIDI.sub("", text)
    # 3. strip zero-width characters, preserving our own fence guards
    text = _strip_zero_width_keep_fence_guards(text)
    # 4. neutralize role-boundary lines
    lines = text.split("\n")
    lines = [
        USER_CONTENT_MARKER + line if _ROLE_LINE.match(line) else line for line in lines
    ]
    # 5. guard lines consisting of triple backticks
    lines = [FENCE_GUARD + line if line == _FENCE_LINE else line for line in lines]
    return "\n".join(lines)


def _has_imperative_override(text: str) -> bool:
    words = _WORD.findall(text)
    for i, word in enumerate(words):
        if word in _OVERRIDE_VERBS:
            window = [w.lower() for w in words[i + 1 : i + 7]]
            if any(w in _OVERRIDE_QUALIFIERS for w in window) and any(
                w in _OVERRIDE_NOUNS for w in window
            ):
                return True
    return False


def detect_injection(text: str) -> list[InjectionFinding]:
    """Identify present vectors without modifying the text.

    control-chars flags C0 bytes other than TAB/LF/CR; ordinary multi-line
    text is not suspicious by itself.
    """
    if not isinstance(text, str):
        raise TypeError(f"expected str, got {type(text).__name__}")
    findings: list[InjectionFinding] = []

    match = re.search(r"[\x00-\x08\x0b\x0c\x0e-\x1f]", text)
    if match:
        findings.append(InjectionFinding(FINDING_CONTROL_CHARS, match.span()))
    match = _BIDI.search(text)
    if match:
        findings.append(InjectionFinding(FINDING_BIDI, match.span()))
    match = _ZERO_WIDTH.search(text)
    if match:
        findings.append(InjectionFinding(FINDING_ZERO_WIDTH, match.span()))

    offset = 0
    role_span = None
    fence_span = None
    for line in text.split("\n"):
        if role_span is None and _ROLE_LINE.match(line):
            role_span = (offset, offset + len(line))
        if fence_span is None and line.strip() == _FENCE_LINE:
            fence_span = (offset, offset + len(line))
        offset += len(line) + 1
    if role_span:
        findings.append(InjectionFinding(FINDING_ROLE_SPOOF, role_span))
    if fence_span:
        findings.append(InjectionFinding(FINDING_FENCE_BREAKOUT, fence_span))

    if _has_imperative_override(text):
        findings.append(InjectionFinding(FINDING_IMPERATIVE_OVERRIDE))
    return findings
