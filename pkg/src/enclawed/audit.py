"""Append-only, hash-chained, injection-neutralized audit log.

Each record is sanitized, canonically encoded, and chained to its predecessor
by SHA-256. One writer handle owns a file; appends from many threads are
serialized so the chain stays linear. verify_chain is an independent walk a
separate process can run.

Known limitation (by construction): deleting records from the *tail* of the
file cannot be detected by the chain alone; deployments should layer WORM
storage or off-host shipping for that.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Any

from .canonical import canonicalize, deep_sanitize
from .errors import AuditAppendError

GENESIS_HASH = "0" * 64
ENV_AUDIT_PATH = "ENCLAWED_AUDIT_PATH"
TRUNCATION_NOTE = "trailing truncation is not detectable by chain verification"


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    ts: int
    type: str
    actor: str
    level: str
    payload: Any
    prev_hash: str
    record_hash: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "type": self.type,
            "actor": self.actor,
            "level": self.level,
            "payload": self.payload,
            "prevHash": self.prev_hash,
            "recordHash": self.record_hash,
        }


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    count: int
    broken_at: int | None = None
    note: str = TRUNCATION_NOTE


def _hash_body(body: dict[str, Any]) -> str:
    return hashlib.sha256(canonicalize(body)).hexdigest()


class AuditLog:
    """One writer handle per file; appends are internally serialized."""

    def __init__(self, path: str | os.PathLike[str]):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._seq = 0
        self._last_hash = GENESIS_HASH
        self._fh = None
        self._recover_tail()
        self._fh = open(self.path, "a", encoding="utf-8", newline="")

    def _recover_tail(self) -> None:
        # Reopening an existing log continues its chain.
        if not os.path.exists(self.path):
            return
        last_line = None
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    last_line = line
        if last_line is None:
            return
        try:
            record = json.loads(last_line)
            self._last_hash = record["recordHash"]
            self._seq = record["seq"] + 1
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise AuditAppendError(
                f"{self.path}: cannot recover chain tail (corrupt last record): {exc}"
            ) from exc

    def append(self, type: str, actor: str, level: str, payload: Any) -> AuditRecord:
        """Sanitize, chain, and flush one record; the tail only advances on success."""
        with self._lock:
            body = {
                "seq": self._seq,
                "ts": int(time.time() * 1000),
                "type": deep_sanitize(type),
                "actor": deep_sanitize(actor),
                "level": deep_sanitize(level),
                "payload": deep_sanitize(payload),
                "prevHash": self._last_hash,
            }
            record_hash = _hash_body(body)
            line = canonicalize({**body, "recordHash": record_hash}).decode("utf-8")
            try:
                self._fh.write(line + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except (OSError, ValueError) as exc:
                raise AuditAppendError(f"{self.path}: append failed: {exc}") from exc
            self._seq += 1
            self._last_hash = record_hash
            return AuditRecord(
                seq=body["seq"],
                ts=body["ts"],
                type=body["type"],
                actor=body["actor"],
                level=body["level"],
                payload=body["payload"],
                prev_hash=body["prevHash"],
                record_hash=record_hash,
            )

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "AuditLog":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def tail(path: str | os.PathLike[str], n: int = 10) -> list[dict[str, Any]]:
    """Last n records as dicts (unverified; display use)."""
    records: list[dict[str, Any]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError:
                    records.append({"unparseable": line.strip()[:120]})
    return records[-n:] if n >= 0 else records


def verify_chain(path: str | os.PathLike[str]) -> VerifyResult:
    """Recompute every record hash and prev-hash link; report the first break.

    An unparseable line is a break at that index. An empty (or absent) file
    verifies trivially. Trailing truncation passes by construction; see
    TRUNCATION_NOTE carried on the result.
    """
    if not os.path.exists(path):
        return VerifyResult(ok=True, count=0)
    lines: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                lines.append(line)
    prev = GENESIS_HASH
    for idx, line in enumerate(lines):
        try:
            record = json.loads(line)
            body = {k: record[k] for k in ("seq", "ts", "type", "actor", "level", "payload", "prevHash")}
            stored = record["recordHash"]
        except (json.JSONDecodeError, KeyError, TypeError):
            return VerifyResult(ok=False, count=len(lines), broken_at=idx)
        if body["seq"] != idx or body["prevHash"] != prev or _hash_body(body) != stored:
            return VerifyResult(ok=False, count=len(lines), broken_at=idx)
        prev = stored
    return VerifyResult(ok=True, count=len(lines))


def default_audit_path(env: dict[str, str] | None = None) -> str:
    source = os.environ if env is None else env
    return source.get(ENV_AUDIT_PATH, os.path.join(os.getcwd(), "audit.jsonl"))
