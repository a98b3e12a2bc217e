"""Classification lattice: labels, dominance, least upper bound, and the
data-driven scheme vocabulary.

A label is a point <rank, compartments, releasability>. Dominance and the
read/write predicates are total functions on integer ranks plus subset tests
on compartment sets; releasability is carried metadata and plays no role in
dominance. Schemes are validated JSON vocabularies with contiguous ranks and
case-insensitively unique names.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    LabelParseError,
    LabelRangeError,
    LabelValidationError,
    PathTraversalError,
    SchemeLoadError,
    SchemeValidationError,
)

RELEASABILITY_PREFIX = "REL:"


def _norm_tokens(tokens: Iterable[str] | None, kind: str) -> tuple[str, ...]:
    if tokens is None:
        return ()
    out = set()
    for tok in tokens:
        if not isinstance(tok, str) or not tok.strip():
            raise LabelValidationError(f"{kind} token must be a non-empty string: {tok!r}")
        out.add(tok.strip().upper())
    return tuple(sorted(out))


@dataclass(frozen=True)
class Label:
    """Immutable classification point. Token sequences are deduplicated and sorted."""

    rank: int
    compartments: tuple[str, ...] = ()
    releasability: tuple[str, ...] = ()


@dataclass(frozen=True)
class LevelDef:
    rank: int
    canonical_name: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClassificationScheme:
    id: str
    description: str
    levels: tuple[LevelDef, ...]
    valid_compartments: tuple[str, ...] = ()
    valid_releasability: tuple[str, ...] = ()
    # casefolded name/alias -> rank, precomputed at parse time
    _name_to_rank: Mapping[str, int] = field(default_factory=dict, repr=False)

    @property
    def max_rank(self) -> int:
        return len(self.levels) - 1

    def rank_of(self, name: str) -> int | None:
        return self._name_to_rank.get(name.casefold())

    def name_of(self, rank: int) -> str:
        return self.levels[rank].canonical_name


def make_label(
    rank: int,
    compartments: Iterable[str] | None = None,
    releasability: Iterable[str] | None = None,
    scheme: ClassificationScheme | None = None,
) -> Label:
    """Construct a validated, immutable label under `scheme`."""
    if not isinstance(rank, int) or isinstance(rank, bool):
        raise LabelRangeError(f"rank must be an integer, got {rank!r}")
    comps = _norm_tokens(compartments, "compartment")
    rels = _norm_tokens(releasability, "releasability")
    if scheme is not None:
        if rank < 0 or rank > scheme.max_rank:
            raise LabelRangeError(
                f"rank {rank} outside scheme '{scheme.id}' range 0..{scheme.max_rank}"
            )
        if scheme.valid_compartments:
            bad = [c for c in comps if c not in scheme.valid_compartments]
            if bad:
                raise LabelValidationError(
                    f"compartments not in scheme '{scheme.id}': {', '.join(bad)}"
                )
        if scheme.valid_releasability:
            bad = [r for r in rels if r not in scheme.valid_releasability]
            if bad:
                raise LabelValidationError(
                    f"releasability not in scheme '{scheme.id}': {', '.join(bad)}"
                )
    elif rank < 0:
        raise LabelRangeError(f"rank must be non-negative, got {rank}")
    return Label(rank, comps, rels)


def dominates(a: Label, b: Label) -> bool:
    """a dominates b iff rank(a) >= rank(b) and b's compartments are a subset of a's."""
    return a.rank >= b.rank and set(b.compartments) <= set(a.compartments)


def access_check(mode: str, subject: Label, obj: Label) -> bool:
    """Read requires subject to dominate object (no-read-up); write the reverse."""
    if mode == "read":
        return dominates(subject, obj)
    if mode == "write":
        return dominates(obj, subject)
    raise ValueError(f"mode must be 'read' or 'write', got {mode!r}")


def lub(a: Label, b: Label) -> Label:
    """Least upper bound: max rank, union of compartments, intersection of releasability."""
    return Label(
        max(a.rank, b.rank),
        tuple(sorted(set(a.compartments) | set(b.compartments))),
        tuple(sorted(set(a.releasability) & set(b.releasability))),
    )


def format_label(label: Label, scheme: ClassificationScheme) -> str:
    """Render as CANONICALNAME[//C1,C2][//REL:R1,R2] with compartments sorted."""
    if label.rank < 0 or label.rank > scheme.max_rank:
        raise LabelRangeError(f"rank {label.rank} outside scheme '{scheme.id}'")
    parts = [scheme.name_of(label.rank)]
    if label.compartments:
        parts.append(",".join(label.compartments))
    if label.releasability:
        parts.append(RELEASABILITY_PREFIX + ",".join(label.releasability))
    return "//".join(parts)


def parse_label(text: str, scheme: ClassificationScheme) -> Label:
    """Inverse of format_label; case-insensitive, aliases resolve to canonical rank.

    Level names may themselves contain '//' (e.g. TOP SECRET//SCI), so the
    longest leading segment run matching a known name wins.
    """
    if not isinstance(text, str) or not text.strip():
        raise LabelParseError("empty label text")
    segments = text.strip().split("//")
    rank = None
    rest_start = 0
    for k in range(len(segments), 0, -1):
        candidate = "//".join(segments[:k]).strip()
        found = scheme.rank_of(candidate)
        if found is not None:
            rank = found
            rest_start = k
            break
    if rank is None:
        raise LabelParseError(
            f"unknown level name {segments[0].strip()!r} in scheme '{scheme.id}'"
        )
    compartments: list[str] = []
    releasability: list[str] = []
    for seg in segments[rest_start:]:
        seg = seg.strip()
        if not seg:
            raise LabelParseError(f"empty segment in label text {text!r}")
        if seg.upper().startswith(RELEASABILITY_PREFIX):
            releasability.extend(t for t in seg[len(RELEASABILITY_PREFIX):].split(",") if t.strip())
        else:
            compartments.extend(t for t in seg.split(",") if t.strip())
    return make_label(rank, compartments, releasability, scheme)


def parse_classification_scheme(document: object) -> ClassificationScheme:
    """Validate a scheme document (already-parsed JSON).

    Enforced invariants: real string id; non-empty levels; integer ranks,
    contiguous from 0; canonicalName a genuine string (no coercion); all names
    and aliases unique after case-insensitive normalization.
    """
    if not isinstance(document, dict):
        raise SchemeValidationError("bad-document", "scheme document must be an object")
    scheme_id = document.get("id")
    if not isinstance(scheme_id, str) or not scheme_id.strip():
        raise SchemeValidationError("missing-id", "scheme id missing or not a string")
    description = document.get("description", "")
    if not isinstance(description, str):
        raise SchemeValidationError("bad-document", "description must be a string")
    raw_levels = document.get("levels")
    if not isinstance(raw_levels, list) or not raw_levels:
        raise SchemeValidationError("empty-levels", "levels must be a non-empty list")

    levels: list[LevelDef] = []
    for entry in raw_levels:
        if not isinstance(entry, dict):
            raise SchemeValidationError("bad-document", "each level must be an object")
        rank = entry.get("rank")
        if isinstance(rank, bool) or not isinstance(rank, int):
            raise SchemeValidationError("bad-rank-type", f"rank must be an integer: {rank!r}")
        if rank < 0:
            raise SchemeValidationError("negative-rank", f"rank must be non-negative: {rank}")
        name = entry.get("canonicalName")
        if not isinstance(name, str) or not name.strip():
            # a genuine string is required; no String(...) style coercion
            raise SchemeValidationError(
                "non-string-name", f"canonicalName must be a non-empty string: {name!r}"
            )
        aliases = entry.get("aliases", [])
        if not isinstance(aliases, list) or any(not isinstance(a, str) for a in aliases):
            raise SchemeValidationError("bad-document", "aliases must be a list of strings")
        levels.append(LevelDef(rank, name.strip(), tuple(a.strip() for a in aliases)))

    levels.sort(key=lambda lv: lv.rank)
    ranks = [lv.rank for lv in levels]
    if ranks != list(range(len(levels))):
        raise SchemeValidationError(
            "non-contiguous-ranks", f"ranks must be contiguous from 0, got {ranks}"
        )

    name_to_rank: dict[str, int] = {}
    for lv in levels:
        for name in (lv.canonical_name, *lv.aliases):
            key = name.casefold()
            if key in name_to_rank:
                raise SchemeValidationError(
                    "duplicate-name", f"duplicate normalized name {name!r}"
                )
            name_to_rank[key] = lv.rank

    def _str_list(key: str) -> tuple[str, ...]:
        raw = document.get(key, [])
        if not isinstance(raw, list) or any(not isinstance(t, str) for t in raw):
            raise SchemeValidationError("bad-document", f"{key} must be a list of strings")
        return tuple(sorted({t.strip().upper() for t in raw}))

    return ClassificationScheme(
        id=scheme_id.strip(),
        description=description,
        levels=tuple(levels),
        valid_compartments=_str_list("validCompartments"),
        valid_releasability=_str_list("validReleasability"),
        _name_to_rank=name_to_rank,
    )


def _preset(scheme_id: str, description: str, names: Sequence[tuple[str, Sequence[str]]]) -> ClassificationScheme:
    return parse_classification_scheme(
        {
            "id": scheme_id,
            "description": description,
            "levels": [
                {"rank": i, "canonicalName": name, "aliases": list(aliases)}
                for i, (name, aliases) in enumerate(names)
            ],
            # presets ship permissive compartment/releasability vocabularies
            "validCompartments": [],
            "validReleasability": [],
        }
    )


PRESET_SCHEMES: dict[str, ClassificationScheme] = {
    s.id: s
    for s in (
        _preset(
            "enclawed-default",
            "Industry-generic six-tier ladder (generic merged with government-style top tiers).",
            [
                ("PUBLIC", ()),
                ("INTERNAL", ()),
                ("CONFIDENTIAL", ()),
                ("RESTRICTED", ()),
                ("RESTRICTED-PLUS", ()),
                ("SCI", ()),
            ],
        ),
        _preset(
            "us-government",
            "US-government markings, UNCLASSIFIED to TOP SECRET//SCI.",
            [
                ("UNCLASSIFIED", ()),
                ("CUI", ()),
                ("CONFIDENTIAL", ()),
                ("SECRET", ()),
                ("TOP SECRET", ("q-cleared",)),
                ("TOP SECRET//SCI", ()),
            ],
        ),
        _preset(
            "healthcare-hipaa",
            "Healthcare ladder with PHI tiers and embargoed research.",
            [
                ("PUBLIC", ()),
                ("INTERNAL", ()),
                ("PHI", ()),
                ("SENSITIVE-PHI", ()),
                ("RESEARCH-EMBARGOED", ()),
            ],
        ),
        _preset(
            "financial-services",
            "Financial-services ladder with MNPI and privileged-counsel tiers.",
            [
                ("PUBLIC", ()),
                ("INTERNAL", ()),
                ("CONFIDENTIAL", ()),
                ("MNPI", ()),
                ("PRIVILEGED-COUNSEL", ()),
            ],
        ),
        _preset(
            "generic-3-tier",
            "Minimal three-tier ladder.",
            [
                ("PUBLIC", ()),
                ("INTERNAL", ()),
                ("RESTRICTED", ()),
            ],
        ),
    )
}


def load_scheme_by_name(
    name_or_path: str, allowed_dirs: Sequence[str] | None = None
) -> ClassificationScheme:
    """Resolve a preset id, or load and validate a scheme JSON file.

    File paths are canonicalized and, when allowed_dirs is given, must fall
    under one of those directories; errors carry the file path.
    """
    preset = PRESET_SCHEMES.get(name_or_path.strip().lower())
    if preset is not None:
        return preset
    path = os.path.realpath(name_or_path)
    if allowed_dirs is not None:
        roots = [os.path.realpath(d) for d in allowed_dirs]
        if not any(
            path == root or path.startswith(root + os.sep) for root in roots
        ):
            raise PathTraversalError(
                f"scheme path {name_or_path!r} resolves outside the allowed directories"
            )
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SchemeLoadError(f"{path}: cannot read scheme file: {exc}") from exc
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemeLoadError(f"{path}: malformed JSON: {exc}") from exc
    try:
        return parse_classification_scheme(document)
    except SchemeValidationError as exc:
        raise SchemeLoadError(f"{path}: {exc}") from exc
