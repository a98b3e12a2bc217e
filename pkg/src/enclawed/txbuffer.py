"""Memory-bounded, hash-chained buffer of reversible actions.

Records carry a caller-registered inverse. While buffered they can be rolled
back LIFO; when the byte cap is hit, the oldest buffered records auto-commit
FIFO (implicit commit: the inverse handle is dropped, the chain entry stays).
A failed inverse is retained with state rollback-failed for forensics and the
chain is re-linked after every rollback so subsequent records verify.
"""

from __future__ import annotations

import hashlib
import os
import time
import uuid
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable

from .canonical import canonicalize
from .errors import BufferConfigError, RecordTooLargeError
from .audit import GENESIS_HASH, VerifyResult

if TYPE_CHECKING:  # pragma: no cover
    from .audit import AuditLog

STATE_BUFFERED = "buffered"
STATE_COMMITTED = "committed"
STATE_ROLLED_BACK = "rolled-back"
STATE_ROLLBACK_FAILED = "rollback-failed"

# canonical-encoding size of the description alone underestimates the record
DEFAULT_RECORD_OVERHEAD = 64


@dataclass
class TxRecord:
    id: str
    seq: int
    ts: int
    description: str
    approx_bytes: int
    prev_hash: str
    record_hash: str
    state: str = STATE_BUFFERED
    inverse: Callable[[], Any] | None = field(default=None, repr=False, compare=False)

    def hash_body(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "seq": self.seq,
            "ts": self.ts,
            "description": self.description,
            "approxBytes": self.approx_bytes,
            "prevHash": self.prev_hash,
        }


@dataclass(frozen=True)
class RollbackResult:
    rolled_back: int
    errors: tuple[tuple[str, str], ...]  # (record id, error message)
    shortfall: int = 0


def _hash_record(body: dict[str, Any]) -> str:
    return hashlib.sha256(canonicalize(body)).hexdigest()


def default_ram_probe() -> int:
    """Total system RAM in bytes (Linux sysconf; generous fallback elsewhere)."""
    try:
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):  # pragma: no cover
        return 8 * 1024**3


class TransactionBuffer:
    """Single-writer rollback window; mutating calls are externally serialized."""

    def __init__(
        self,
        ram_percent: float = 50,
        max_bytes: int | None = None,
        ram_probe: Callable[[], int] | None = None,
        audit: "AuditLog | None" = None,
    ):
        if not 0 < ram_percent <= 100:
            raise BufferConfigError(f"ramPercent must be in (0, 100], got {ram_percent}")
        probe = ram_probe or default_ram_probe
        capacity = int(probe() * ram_percent / 100)
        if max_bytes is not None:
            capacity = min(capacity, max_bytes)
        self.capacity = capacity
        self._audit = audit
        self._records: list[TxRecord] = []
        self._seq = 0
        self._last_hash = GENESIS_HASH
        self._buffered_bytes = 0

    # -- introspection ----------------------------------------------------

    def records(self) -> list[TxRecord]:
        return list(self._records)

    def buffered(self) -> list[TxRecord]:
        return [r for r in self._records if r.state == STATE_BUFFERED]

    @property
    def buffered_bytes(self) -> int:
        return self._buffered_bytes

    def _emit(self, record_type: str, record: TxRecord, **extra: Any) -> None:
        if self._audit is not None:
            self._audit.append(
                record_type,
                "txbuffer",
                "",
                {"id": record.id, "seq": record.seq, "description": record.description, **extra},
            )

    # -- operations -------------------------------------------------------

    def record(
        self,
        description: str,
        inverse: Callable[[], Any],
        approx_bytes: int | None = None,
    ) -> TxRecord:
        """Append a reversible action, auto-committing oldest records FIFO to fit."""
        if approx_bytes is None:
            approx_bytes = len(canonicalize(description)) + DEFAULT_RECORD_OVERHEAD
        if approx_bytes <= 0:
            raise BufferConfigError(f"approxBytes must be positive, got {approx_bytes}")
        if approx_bytes > self.capacity:
            raise RecordTooLargeError(
                f"record of {approx_bytes} bytes exceeds buffer capacity {self.capacity}"
            )
        while self._buffered_bytes + approx_bytes > self.capacity:
            self._evict_oldest()
        body = {
            "id": uuid.uuid4().hex,
            "seq": self._seq,
            "ts": int(time.time() * 1000),
            "description": description,
            "approxBytes": approx_bytes,
            "prevHash": self._last_hash,
        }
        record = TxRecord(
            id=body["id"],
            seq=body["seq"],
            ts=body["ts"],
            description=description,
            approx_bytes=approx_bytes,
            prev_hash=self._last_hash,
            record_hash=_hash_record(body),
            inverse=inverse,
        )
        self._records.append(record)
        self._seq += 1
        self._last_hash = record.record_hash
        self._buffered_bytes += approx_bytes
        self._emit("transaction.record", record, approxBytes=approx_bytes)
        return record

    def _evict_oldest(self) -> None:
        for record in self._records:
            if record.state == STATE_BUFFERED:
                record.state = STATE_COMMITTED
                record.inverse = None  # implicit commit: no longer invertible
                self._buffered_bytes -= record.approx_bytes
                self._emit("transaction.commit", record, evicted=True)
                return
        raise RecordTooLargeError("no buffered records left to evict")

    def rollback(self, n: int) -> RollbackResult:
        """Run the n most recent buffered inverses newest-first.

        A raising inverse is captured and rollback continues; afterwards the
        chain is re-linked to the new tail so later records verify.
        """
        if n < 0:
            raise BufferConfigError(f"rollback count must be >= 0, got {n}")
        window = self.buffered()[-n:] if n else []
        shortfall = max(0, n - len(window))
        errors: list[tuple[str, str]] = []
        rolled_back = 0
        for record in reversed(window):
            try:
                if record.inverse is not None:
                    record.inverse()
                record.state = STATE_ROLLED_BACK
                rolled_back += 1
                self._emit("transaction.rollback", record)
            except Exception as exc:  # noqa: BLE001 - a broken inverse must not block the rest
                record.state = STATE_ROLLBACK_FAILED
                errors.append((record.id, str(exc)))
                self._emit("transaction.rollback-failed", record, error=str(exc))
            record.inverse = None
            self._buffered_bytes -= record.approx_bytes
        if window:
            self._reanchor()
        return RollbackResult(
            rolled_back=rolled_back, errors=tuple(errors), shortfall=shortfall
        )

    def _reanchor(self) -> None:
        """Drop rolled-back records and re-link retained ones to the new tail."""
        survivors = [r for r in self._records if r.state != STATE_ROLLED_BACK]
        prev = GENESIS_HASH
        for record in survivors:
            if record.prev_hash != prev:
                record.prev_hash = prev
                record.record_hash = _hash_record(record.hash_body())
            prev = record.record_hash
        self._records = survivors
        self._last_hash = prev

    def verify(self) -> VerifyResult:
        """Independent chain walk over the in-memory records."""
        prev = GENESIS_HASH
        for idx, record in enumerate(self._records):
            if record.prev_hash != prev or _hash_record(record.hash_body()) != record.record_hash:
                return VerifyResult(ok=False, count=len(self._records), broken_at=idx)
            prev = record.record_hash
        return VerifyResult(ok=True, count=len(self._records))
