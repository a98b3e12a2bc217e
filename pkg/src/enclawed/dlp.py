"""Regex-catalog scanner with severity-thresholded redaction.

Zero-width characters are stripped from the scan buffer before matching (the
camouflage evasion), with spans reported against the stripped buffer as byte
offsets and mapped back to the original text for redaction. Input is capped
at 1 MiB by default; callers choose throw or truncate. A backstop, not a
primary control: paraphrased or out-of-catalog content passes untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .dlp_catalog import CATALOG, SEVERITY_ORDER, CatalogPattern
from .errors import DlpInputError, DlpOversizeError

MAX_BYTES_DEFAULT = 1024 * 1024
REDACTION_TOKEN = "[REDACTED]"

_ZERO_WIDTH = frozenset("\u200b\u200c\u200d\u2060\ufeff")


@dataclass(frozen=True)
class ScanOptions:
    max_bytes: int = MAX_BYTES_DEFAULT
    on_oversize: str = "throw"  # throw | truncate

    def __post_init__(self) -> None:
        if self.max_bytes <= 0:
            raise DlpInputError("maxBytes must be positive")
        if self.on_oversize not in ("throw", "truncate"):
            raise DlpInputError(f"onOversize must be throw or truncate, got {self.on_oversize!r}")


@dataclass(frozen=True)
class DlpFinding:
    family: str
    pattern_id: str
    severity: str
    span: tuple[int, int]  # byte offsets into the stripped scan buffer


@dataclass(frozen=True)
class _Detailed:
    finding: DlpFinding
    orig_span: tuple[int, int]  # character offsets into the original text


def severity_rank(severity: str) -> int:
    try:
        return SEVERITY_ORDER[severity]
    except KeyError:
        raise DlpInputError(f"unknown severity {severity!r}") from None


def _prepare(text: str, options: ScanOptions) -> tuple[str, list[int]]:
    """Apply the byte cap, strip zero-width chars, build the offset map."""
    encoded = text.encode("utf-8")
    if len(encoded) > options.max_bytes:
        if options.on_oversize == "throw":
            raise DlpOversizeError(
                f"input is {len(encoded)} bytes, over the {options.max_bytes} byte cap"
            )
        text = encoded[: options.max_bytes].decode("utf-8", errors="ignore")
    stripped_chars: list[str] = []
    orig_index: list[int] = []
    for i, ch in enumerate(text):
        if ch in _ZERO_WIDTH:
            continue
        stripped_chars.append(ch)
        orig_index.append(i)
    return "".join(stripped_chars), orig_index


def _scan_detailed(
    text: str, options: Optional[ScanOptions], catalog: tuple[CatalogPattern, ...]
) -> list[_Detailed]:
    if not isinstance(text, str):
        raise DlpInputError(f"scanner input must be a string, got {type(text).__name__}")
    opts = options or ScanOptions()
    stripped, orig_index = _prepare(text, opts)
    # cumulative UTF-8 byte offset per character position of the stripped buffer
    byte_off = [0] * (len(stripped) + 1)
    for i, ch in enumerate(stripped):
        byte_off[i + 1] = byte_off[i] + len(ch.encode("utf-8"))
    results: list[_Detailed] = []
    for entry in catalog:
        for match in entry.regex.finditer(stripped):
            start, end = match.span()
            if start == end:
                continue
            finding = DlpFinding(
                family=entry.family,
                pattern_id=entry.id,
                severity=entry.severity,
                span=(byte_off[start], byte_off[end]),
            )
            orig_span = (orig_index[start], orig_index[end - 1] + 1)
            results.append(_Detailed(finding, orig_span))
    results.sort(key=lambda d: (d.finding.span[0], d.finding.pattern_id))
    return results


def scan(text: str, options: Optional[ScanOptions] = None) -> list[DlpFinding]:
    """Evaluate every catalog pattern; findings sorted by span start."""
    return [d.finding for d in _scan_detailed(text, options, CATALOG)]


def redact(text: str, threshold: str, options: Optional[ScanOptions] = None) -> str:
    """Replace findings at or above the threshold with [REDACTED].

    Overlapping spans are merged, then replaced right-to-left so earlier
    offsets stay valid; non-matching text is byte-identical.
    """
    floor = severity_rank(threshold)
    detailed = _scan_detailed(text, options, CATALOG)
    spans = sorted(
        d.orig_span for d in detailed if severity_rank(d.finding.severity) >= floor
    )
    if not spans:
        return text
    merged: list[list[int]] = [list(spans[0])]
    for start, end in spans[1:]:
        if start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    out = text
    for start, end in reversed(merged):
        out = out[:start] + REDACTION_TOKEN + out[end:]
    return out
