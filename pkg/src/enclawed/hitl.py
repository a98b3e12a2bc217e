"""Per-agent session state machine with cooperative cancellation, approval
queue, and event stream.

Sessions move PENDING -> RUNNING <-> PAUSED -> {STOPPED, COMPLETED, FAILED};
no transition leaves a terminal state. Agent code awaits checkpoint() between
actions (cooperative cancellation, not preemption) and propose_action() for
human-gated action types. The controller does no file I/O on the transition
or checkpoint paths: audit appends are handed to a background pump.
"""

from __future__ import annotations

import asyncio
import enum
import time
import uuid
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable

from .canonical import deep_sanitize
from .errors import (
    AgentStoppedError,
    ApprovalDeniedError,
    RegistrationError,
    ResolutionError,
    SessionStateError,
)

if TYPE_CHECKING:  # pragma: no cover
    from .audit import AuditLog


class SessionState(enum.Enum):
    PENDING = "PENDING"
    RUNNING = "RUNNING"
    PAUSED = "PAUSED"
    STOPPED = "STOPPED"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


TERMINAL_STATES = frozenset(
    {SessionState.STOPPED, SessionState.COMPLETED, SessionState.FAILED}
)

_ACTION_TO_STATE = {
    "start": SessionState.RUNNING,
    "pause": SessionState.PAUSED,
    "resume": SessionState.RUNNING,
    "stop": SessionState.STOPPED,
    "complete": SessionState.COMPLETED,
    "fail": SessionState.FAILED,
}

# start and resume share a target state but are distinct edges of the diagram
_LEGAL_ACTIONS = frozenset(
    {
        (SessionState.PENDING, "start"),
        (SessionState.RUNNING, "pause"),
        (SessionState.PAUSED, "resume"),
        (SessionState.RUNNING, "stop"),
        (SessionState.RUNNING, "complete"),
        (SessionState.RUNNING, "fail"),
        (SessionState.PAUSED, "stop"),
        (SessionState.PAUSED, "complete"),
        (SessionState.PAUSED, "fail"),
    }
)

APPROVAL_PENDING = "pending"
APPROVAL_ALLOWED = "allowed"
APPROVAL_DENIED = "denied"
APPROVAL_VOIDED = "voided"


@dataclass(frozen=True)
class ControllerEvent:
    seq: int
    name: str  # hitl.<type>
    session_id: str
    ts: int
    detail: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "name": self.name,
            "sessionId": self.session_id,
            "ts": self.ts,
            "detail": self.detail,
        }


@dataclass
class ApprovalRequest:
    id: str
    session_id: str
    action_type: str
    payload: Any
    status: str = APPROVAL_PENDING
    future: "asyncio.Future[str] | None" = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "sessionId": self.session_id,
            "actionType": self.action_type,
            "payload": self.payload,
            "status": self.status,
        }


class Subscription:
    """Bounded event queue; a slow subscriber loses oldest events, counted."""

    def __init__(self, maxsize: int = 256):
        self.queue: "asyncio.Queue[ControllerEvent]" = asyncio.Queue(maxsize=maxsize)
        self.dropped = 0

    def publish(self, event: ControllerEvent) -> None:
        try:
            self.queue.put_nowait(event)
        except asyncio.QueueFull:
            try:
                self.queue.get_nowait()
            except asyncio.QueueEmpty:  # pragma: no cover
                pass
            self.dropped += 1
            self.queue.put_nowait(event)


class AgentSession:
    def __init__(
        self,
        controller: "HitlController",
        agent_id: str,
        approval_required: Iterable[str] = (),
    ):
        self.controller = controller
        self.agent_id = agent_id
        self.approval_required = frozenset(approval_required)
        self.state = SessionState.PENDING
        self.stop_reason: str | None = None
        self._wake = asyncio.Event()

    # -- operator controls --------------------------------------------------

    def start(self) -> None:
        self.controller.transition(self.agent_id, "start")

    def pause(self) -> None:
        self.controller.transition(self.agent_id, "pause")

    def resume(self) -> None:
        self.controller.transition(self.agent_id, "resume")

    def stop(self, reason: str = "") -> None:
        self.controller.transition(self.agent_id, "stop", reason=reason)

    def complete(self) -> None:
        self.controller.transition(self.agent_id, "complete")

    def fail(self, reason: str = "") -> None:
        self.controller.transition(self.agent_id, "fail", reason=reason)

    # -- agent-side suspending calls -----------------------------------------

    async def checkpoint(self) -> None:
        """Return immediately when RUNNING; suspend while PAUSED (or PENDING);
        raise AgentStoppedError once the session is terminal."""
        while True:
            if self.state is SessionState.RUNNING:
                return
            if self.state in TERMINAL_STATES:
                raise AgentStoppedError(
                    f"session {self.agent_id} is {self.state.value}"
                )
            self._wake.clear()
            await self._wake.wait()

    async def propose_action(self, action_type: str, payload: Any) -> str:
        """Gate an action on the human approval queue when its type requires it.

        Returns "allowed"; deny raises ApprovalDeniedError; a stop while the
        request is pending voids it and raises AgentStoppedError.
        """
        await self.checkpoint()
        if action_type not in self.approval_required:
            return APPROVAL_ALLOWED
        request = self.controller._enqueue_approval(self, action_type, payload)
        decision = await request.future
        if decision == APPROVAL_DENIED:
            raise ApprovalDeniedError(
                f"action {action_type!r} denied for session {self.agent_id}"
            )
        return APPROVAL_ALLOWED


class HitlController:
    """Session registry, approval queue, and event fan-out.

    All mutations run on one event loop (a single serialization domain);
    checkpoint/propose_action are suspending calls usable from many agent
    tasks concurrently.
    """

    def __init__(self, audit: "AuditLog | None" = None):
        self.sessions: dict[str, AgentSession] = {}
        self.approvals: dict[str, ApprovalRequest] = {}
        self.events: list[ControllerEvent] = []
        self._subs: list[Subscription] = []
        self._event_seq = 0
        self._audit = audit
        self._audit_queue: "asyncio.Queue[tuple[str, str, Any]] | None" = None
        self._audit_pump: asyncio.Task | None = None

    # -- sessions -------------------------------------------------------------

    def create_session(
        self, agent_id: str, approval_required: Iterable[str] = ()
    ) -> AgentSession:
        if agent_id in self.sessions:
            raise RegistrationError(f"duplicate agent id {agent_id!r}")
        session = AgentSession(self, agent_id, approval_required)
        self.sessions[agent_id] = session
        self._emit("hitl.session.created", agent_id, {"approvalRequired": sorted(session.approval_required)})
        return session

    def get_session(self, agent_id: str) -> AgentSession | None:
        return self.sessions.get(agent_id)

    def transition(self, agent_id: str, action: str, reason: str = "") -> None:
        session = self.sessions.get(agent_id)
        if session is None:
            raise RegistrationError(f"unknown session {agent_id!r}")
        to_state = _ACTION_TO_STATE.get(action)
        if to_state is None:
            raise SessionStateError(session.state.value, action)
        if (session.state, action) not in _LEGAL_ACTIONS:
            raise SessionStateError(session.state.value, to_state.value)
        session.state = to_state
        detail: dict[str, Any] = {"action": action}
        if reason:
            detail["reason"] = reason
        if to_state is SessionState.STOPPED:
            session.stop_reason = reason
        self._emit(f"hitl.{action}", agent_id, detail)
        if to_state in TERMINAL_STATES:
            self._void_pending_approvals(session)
        session._wake.set()

    def stop_all(self, reason: str) -> int:
        """Mass halt: every RUNNING or PAUSED session is stopped."""
        stopped = 0
        for session in list(self.sessions.values()):
            if session.state in (SessionState.RUNNING, SessionState.PAUSED):
                self.transition(session.agent_id, "stop", reason=reason)
                stopped += 1
        return stopped

    # -- approvals --------------------------------------------------------------

    def _enqueue_approval(
        self, session: AgentSession, action_type: str, payload: Any
    ) -> ApprovalRequest:
        request = ApprovalRequest(
            id=uuid.uuid4().hex,
            session_id=session.agent_id,
            action_type=action_type,
            payload=deep_sanitize(payload),
            future=asyncio.get_running_loop().create_future(),
        )
        self.approvals[request.id] = request
        self._emit(
            "hitl.approval.requested",
            session.agent_id,
            {"approvalId": request.id, "actionType": action_type, "payload": request.payload},
        )
        return request

    def resolve_approval(self, approval_id: str, decision: str) -> None:
        request = self.approvals.get(approval_id)
        if request is None:
            raise ResolutionError(f"unknown approval id {approval_id!r}")
        if request.status != APPROVAL_PENDING:
            raise ResolutionError(
                f"approval {approval_id!r} already {request.status}"
            )
        if decision not in ("allow", "deny"):
            raise ResolutionError(f"decision must be allow or deny, got {decision!r}")
        request.status = APPROVAL_ALLOWED if decision == "allow" else APPROVAL_DENIED
        self._emit(
            "hitl.approval.resolved",
            request.session_id,
            {"approvalId": request.id, "decision": decision},
        )
        if request.future is not None and not request.future.done():
            request.future.set_result(request.status)

    def pending_approvals(self) -> list[ApprovalRequest]:
        return [r for r in self.approvals.values() if r.status == APPROVAL_PENDING]

    def _void_pending_approvals(self, session: AgentSession) -> None:
        for request in self.approvals.values():
            if request.session_id == session.agent_id and request.status == APPROVAL_PENDING:
                request.status = APPROVAL_VOIDED
                self._emit(
                    "hitl.approval.voided",
                    session.agent_id,
                    {"approvalId": request.id, "actionType": request.action_type},
                )
                if request.future is not None and not request.future.done():
                    request.future.set_exception(
                        AgentStoppedError(
                            f"session {session.agent_id} stopped while approval pending"
                        )
                    )

    # -- events and audit -------------------------------------------------------

    def subscribe(self, maxsize: int = 256) -> Subscription:
        sub = Subscription(maxsize=maxsize)
        self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        if sub in self._subs:
            self._subs.remove(sub)

    def _emit(self, name: str, session_id: str, detail: dict[str, Any]) -> None:
        event = ControllerEvent(
            seq=self._event_seq,
            name=name,
            session_id=session_id,
            ts=int(time.time() * 1000),
            detail=detail,
        )
        self._event_seq += 1
        self.events.append(event)
        for sub in self._subs:
            sub.publish(event)
        if self._audit is not None:
            self._enqueue_audit(name, session_id, {"seq": event.seq, **detail})

    def _enqueue_audit(self, name: str, session_id: str, payload: dict[str, Any]) -> None:
        try:
            loop = asyncio.get_running_loop()
        except RuntimeError:
            # no loop (sync/CLI use): append inline, still exactly once
            self._audit.append(name, f"session:{session_id}", "", payload)
            return
        if self._audit_queue is None:
            self._audit_queue = asyncio.Queue()
            self._audit_pump = loop.create_task(self._pump_audit())
        self._audit_queue.put_nowait((name, session_id, payload))

    async def _pump_audit(self) -> None:
        loop = asyncio.get_running_loop()
        while True:
            name, session_id, payload = await self._audit_queue.get()
            await loop.run_in_executor(
                None, self._audit.append, name, f"session:{session_id}", "", payload
            )
            self._audit_queue.task_done()

    async def drain_audit(self) -> None:
        """Wait for queued audit appends to hit the log (tests, shutdown)."""
        if self._audit_queue is not None:
            await self._audit_queue.join()

    async def shutdown(self) -> None:
        await self.drain_audit()
        if self._audit_pump is not None:
            self._audit_pump.cancel()
            try:
                await self._audit_pump
            except asyncio.CancelledError:
                pass
            self._audit_pump = None
