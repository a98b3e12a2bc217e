"""Method A: static effect containment over skill scripts.

Walks every script colocated with SKILL.md, strips comments per script
family, and maps lexical constructs to capability tokens from a data catalog.
Reflective constructs (eval/exec/dynamic import) taint the verdict to the
lattice top; an unreadable script does too (deny-safe). The result is a sound
over-approximation: it may name effects a script cannot actually produce, but
never misses one the catalog models.

Comment stripping is line-lexical with string awareness limited to
single-line literals; anything ambiguous is left in place, which can only
widen the effect set.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass
from typing import Any

from .effects import SKILL_CAPABILITIES, EffectSet
from .skills import SkillManifest, parse_skill_manifest

FAMILY_BY_EXTENSION = {
    ".py": "python",
    ".sh": "shell",
    ".bash": "shell",
    ".js": "node",
    ".mjs": "node",
    ".cjs": "node",
    ".ts": "typed",
    ".tsx": "typed",
}

TOP = "__top__"  # catalog marker: construct taints the analysis to top

_CATALOG: dict[str, tuple[tuple[re.Pattern[str], str], ...]] = {
    "python": (
        (re.compile(r"\beval\s*\("), TOP),
        (re.compile(r"\bexec\s*\("), TOP),
        (re.compile(r"\b__import__\s*\("), TOP),
        (re.compile(r"\bimportlib\b"), TOP),
        (re.compile(r"\b(?:requests|httpx|aiohttp)\b"), "net.egress"),
        (re.compile(r"\burllib\.request\b|\bhttp\.client\b"), "net.egress"),
        (re.compile(r"\bsocket\.(?:socket|create_connection)\b"), "net.egress"),
        (re.compile(r"\bopen\s*\([^)\n]*['\"][waxWAX][bt+]*['\"]"), "fs.write.rev"),
        (re.compile(r"\bopen\s*\((?![^)\n]*['\"][waxWAX][bt+]*['\"])"), "fs.read"),
        (re.compile(r"\bos\.(?:remove|unlink|rmdir)\b|\bshutil\.rmtree\b"), "fs.write.irrev"),
        (re.compile(r"\bsubprocess\b|\bos\.system\b|\bos\.popen\b|\bos\.exec\w*\b"), "spawn.proc"),
        (re.compile(r"\b(?:invoke_tool|call_tool)\s*\("), "tool.invoke"),
        (re.compile(r"\bpublish(?:_package)?\s*\(|\btwine\b"), "publish"),
        (re.compile(r"\bstripe\b|\bcharge_card\s*\("), "pay"),
        (re.compile(r"\b(?:ALTER|DROP)\s+TABLE\b", re.IGNORECASE), "mutate.schema"),
    ),
    "shell": (
        (re.compile(r"\beval\b"), TOP),
        (re.compile(r"(?:^|\s)source\s|\B\.\s+/"), TOP),
        (re.compile(r"\b(?:curl|wget|nc|ncat|ssh|scp|rsync)\b"), "net.egress"),
        (re.compile(r"\b(?:rm|rmdir|shred)\b"), "fs.write.irrev"),
        # wget (and scp/rsync) land bytes on disk as their normal job
        (re.compile(r"\b(?:wget|scp|rsync)\b"), "fs.write.rev"),
        (re.compile(r"\b(?:tee|touch|mkdir|cp|mv)\b|(?:^|\s)>{1,2}\s*\S"), "fs.write.rev"),
        (re.compile(r"\b(?:cat|head|tail|grep|less)\b|(?:^|\s)<\s*\S"), "fs.read"),
        (re.compile(r"\b(?:python3?|node|xargs)\b"), "spawn.proc"),
        (re.compile(r"\bgit\s+push\b|\bnpm\s+publish\b"), "publish"),
        (re.compile(r"\bstripe\b"), "pay"),
        (re.compile(r"\b(?:psql|mysql|sqlite3)\b"), "mutate.schema"),
        (re.compile(r"\binvoke-tool\b"), "tool.invoke"),
    ),
    "node": (
        (re.compile(r"\beval\s*\("), TOP),
        (re.compile(r"\bnew\s+Function\b"), TOP),
        (re.compile(r"\bimport\s*\("), TOP),
        (re.compile(r"\brequire\s*\(\s*[^'\")]"), TOP),
        (re.compile(r"\bfetch\s*\(|\bhttps?\.request\b|\baxios\b|\bWebSocket\b"), "net.egress"),
        (re.compile(r"\bnet\.connect\b|\bcreateConnection\b"), "net.egress"),
        (re.compile(r"\b(?:writeFile|appendFile)(?:Sync)?\b|\bcreateWriteStream\b"), "fs.write.rev"),
        (re.compile(r"\bunlink(?:Sync)?\b|\brm(?:Sync)?\s*\(|\brmdir(?:Sync)?\b"), "fs.write.irrev"),
        (re.compile(r"\breadFile(?:Sync)?\b|\bcreateReadStream\b|\breaddir(?:Sync)?\b"), "fs.read"),
        (re.compile(r"\bchild_process\b|\b(?:spawn|execFile|exec)(?:Sync)?\s*\("), "spawn.proc"),
        (re.compile(r"\b(?:invokeTool|callTool)\s*\("), "tool.invoke"),
        (re.compile(r"\bpublish\s*\("), "publish"),
        (re.compile(r"\bstripe\b"), "pay"),
        (re.compile(r"\b(?:ALTER|DROP)\s+TABLE\b", re.IGNORECASE), "mutate.schema"),
    ),
}
_CATALOG["typed"] = _CATALOG["node"]


@dataclass(frozen=True)
class StaticVerdict:
    per_script: dict[str, EffectSet]
    union: EffectSet
    contained: bool
    declared: tuple[str, ...]
    script_digests: dict[str, str]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "perScript": {k: v.to_json() for k, v in sorted(self.per_script.items())},
            "union": self.union.to_json(),
            "contained": self.contained,
            "declared": sorted(self.declared),
            "scriptDigests": dict(sorted(self.script_digests.items())),
            "vocabulary": list(SKILL_CAPABILITIES),
        }


def _strip_hash_comments(source: str) -> str:
    out_lines = []
    for line in source.split("\n"):
        quote: str | None = None
        cut = None
        for i, ch in enumerate(line):
            if quote:
                if ch == quote:
                    quote = None
            elif ch in "'\"":
                quote = ch
            elif ch == "#":
                cut = i
                break
        # an unterminated quote is ambiguous; keep the full line (sound)
        out_lines.append(line if cut is None else line[:cut])
    return "\n".join(out_lines)


def _strip_slash_comments(source: str) -> str:
    out_lines = []
    in_block = False
    for line in source.split("\n"):
        result = []
        quote: str | None = None
        i = 0
        while i < len(line):
            ch = line[i]
            nxt = line[i : i + 2]
            if in_block:
                if nxt == "*/":
                    in_block = False
                    i += 2
                    continue
                i += 1
                continue
            if quote:
                if ch == "\\":
                    result.append(line[i : i + 2])
                    i += 2
                    continue
                if ch == quote:
                    quote = None
                result.append(ch)
                i += 1
                continue
            if ch in "'\"`":
                quote = ch
                result.append(ch)
                i += 1
                continue
            if nxt == "//":
                break
            if nxt == "/*":
                in_block = True
                i += 2
                continue
            result.append(ch)
            i += 1
        out_lines.append("".join(result))
    return "\n".join(out_lines)


def strip_comments(family: str, source: str) -> str:
    if family in ("python", "shell"):
        return _strip_hash_comments(source)
    return _strip_slash_comments(source)


def scan_script(family: str, source: str) -> EffectSet:
    """Effect set of one script body after comment stripping."""
    code = strip_comments(family, source)
    effects = EffectSet.empty()
    for pattern, capability in _CATALOG[family]:
        if pattern.search(code):
            if capability == TOP:
                return EffectSet.top_element()
            effects = effects.add(capability)
    return effects


def analyze_scripts(
    skill_dir: str | os.PathLike[str], manifest: SkillManifest | None = None
) -> StaticVerdict:
    """Walk the skill directory, union the per-script effects, and decide
    containment against the manifest's declared caps."""
    root = os.fspath(skill_dir)
    if manifest is None:
        manifest = parse_skill_manifest(root)
    declared = tuple(manifest.caps)
    per_script: dict[str, EffectSet] = {}
    digests: dict[str, str] = {}
    union = EffectSet.empty()
    for dirpath, _dirnames, filenames in os.walk(root):
        for filename in sorted(filenames):
            family = FAMILY_BY_EXTENSION.get(os.path.splitext(filename)[1].lower())
            if family is None:
                continue
            rel = os.path.relpath(os.path.join(dirpath, filename), root)
            try:
                with open(os.path.join(dirpath, filename), "r", encoding="utf-8") as fh:
                    source = fh.read()
            except (OSError, UnicodeDecodeError):
                per_script[rel] = EffectSet.top_element()
                digests[rel] = ""
                union = EffectSet.top_element()
                continue
            effects = scan_script(family, source)
            per_script[rel] = effects
            digests[rel] = hashlib.sha256(source.encode("utf-8")).hexdigest()
            union = union.union(effects)
    return StaticVerdict(
        per_script=per_script,
        union=union,
        contained=union.is_contained_in(declared),
        declared=declared,
        script_digests=digests,
    )
