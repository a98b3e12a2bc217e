"""Local HTTP control service for the HITL controller.

Endpoints (JSON bodies, loopback bind by default, permissive CORS so the
operator console can be served from anywhere local):

    GET  /sessions                      session table
    POST /sessions/{id}/{action}        start|pause|resume|stop|complete|fail
    GET  /approvals?status=pending      approval queue
    POST /approvals/{id}                {"decision": "allow"|"deny"}
    GET  /events                        server-sent events: replay then follow
    GET  /audit/tail?n=N                last N audit records
    GET  /audit/verify                  chain verification summary

When a console directory is configured, GET / serves its index.html and
sibling assets, so the whole operator surface runs off one port.
"""

from __future__ import annotations

import asyncio
import json
import mimetypes
import os
from typing import Any
from urllib.parse import parse_qs, urlsplit

from . import audit as audit_mod
from .errors import EnclawedError, RegistrationError, ResolutionError, SessionStateError
from .hitl import HitlController

_SESSION_ACTIONS = ("start", "pause", "resume", "stop", "complete", "fail")

_CORS_HEADERS = (
    ("Access-Control-Allow-Origin", "*"),
    ("Access-Control-Allow-Methods", "GET, POST, OPTIONS"),
    ("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID"),
)


def _response(
    status: int,
    body: bytes,
    content_type: str = "application/json",
    extra: tuple[tuple[str, str], ...] = (),
) -> bytes:
    reason = {200: "OK", 204: "No Content", 400: "Bad Request", 404: "Not Found", 409: "Conflict", 500: "Internal Server Error"}.get(status, "OK")
    headers = [
        f"HTTP/1.1 {status} {reason}",
        f"Content-Type: {content_type}",
        f"Content-Length: {len(body)}",
        "Connection: close",
    ]
    headers.extend(f"{k}: {v}" for k, v in _CORS_HEADERS)
    headers.extend(f"{k}: {v}" for k, v in extra)
    return ("\r\n".join(headers) + "\r\n\r\n").encode("ascii") + body


def _json_response(status: int, payload: Any) -> bytes:
    return _response(status, json.dumps(payload).encode("utf-8"))


class ControlApiServer:
    def __init__(
        self,
        controller: HitlController,
        audit_path: str | None = None,
        host: str = "127.0.0.1",
        port: int = 8787,
        console_dir: str | None = None,
    ):
        self.controller = controller
        self.audit_path = audit_path
        self.host = host
        self.port = port
        self.console_dir = console_dir
        self._server: asyncio.AbstractServer | None = None

    @property
    def address(self) -> tuple[str, int]:
        assert self._server is not None, "server not started"
        sock = self._server.sockets[0]
        return sock.getsockname()[:2]

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._handle, self.host, self.port)

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None
        await self.controller.shutdown()

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    # -- request plumbing ---------------------------------------------------

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            request_line = await reader.readline()
            if not request_line:
                return
            try:
                method, raw_target, _ = request_line.decode("latin-1").split(" ", 2)
            except ValueError:
                writer.write(_json_response(400, {"error": "bad request line"}))
                return
            headers: dict[str, str] = {}
            while True:
                line = await reader.readline()
                if line in (b"\r\n", b"\n", b""):
                    break
                if b":" in line:
                    key, _, value = line.decode("latin-1").partition(":")
                    headers[key.strip().lower()] = value.strip()
            body = b""
            length = int(headers.get("content-length", "0") or "0")
            if length:
                body = await reader.readexactly(length)
            await self._route(method.upper(), raw_target, headers, body, writer)
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            try:
                if not writer.is_closing():
                    await writer.drain()
                writer.close()
                await writer.wait_closed()
            except (ConnectionResetError, BrokenPipeError):
                pass

    async def _route(
        self,
        method: str,
        raw_target: str,
        headers: dict[str, str],
        body: bytes,
        writer: asyncio.StreamWriter,
    ) -> None:
        url = urlsplit(raw_target)
        path = url.path
        query = parse_qs(url.query)
        if method == "OPTIONS":
            writer.write(_response(204, b""))
            return
        try:
            if method == "GET" and path == "/sessions":
                writer.write(_json_response(200, self._session_rows()))
            elif method == "POST" and path.startswith("/sessions/"):
                self._session_action(path, body, writer)
            elif method == "GET" and path == "/approvals":
                status = query.get("status", ["pending"])[0]
                rows = [
                    r.to_dict()
                    for r in self.controller.approvals.values()
                    if status in ("all", r.status)
                ]
                writer.write(_json_response(200, rows))
            elif method == "POST" and path.startswith("/approvals/"):
                self._approval_action(path, body, writer)
            elif method == "GET" and path == "/events":
                await self._stream_events(headers, query, writer)
            elif method == "GET" and path == "/audit/tail":
                n = int(query.get("n", ["20"])[0])
                rows = audit_mod.tail(self.audit_path, n) if self.audit_path else []
                writer.write(_json_response(200, rows))
            elif method == "GET" and path == "/audit/verify":
                if self.audit_path:
                    result = audit_mod.verify_chain(self.audit_path)
                    payload = {
                        "ok": result.ok,
                        "count": result.count,
                        "brokenAt": result.broken_at,
                        "note": result.note,
                    }
                else:
                    payload = {"ok": True, "count": 0, "brokenAt": None, "note": "no audit log wired"}
                writer.write(_json_response(200, payload))
            elif method == "GET" and self.console_dir:
                self._serve_static(path, writer)
            else:
                writer.write(_json_response(404, {"error": f"no route {method} {path}"}))
        except json.JSONDecodeError:
            writer.write(_json_response(400, {"error": "invalid JSON body"}))
        except (SessionStateError, ResolutionError) as exc:
            writer.write(_json_response(409, {"error": str(exc)}))
        except RegistrationError as exc:
            writer.write(_json_response(404, {"error": str(exc)}))
        except EnclawedError as exc:
            writer.write(_json_response(500, {"error": str(exc)}))

    def _session_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "id": s.agent_id,
                "state": s.state.value,
                "approvalRequired": sorted(s.approval_required),
                "stopReason": s.stop_reason,
            }
            for s in self.controller.sessions.values()
        ]

    def _session_action(self, path: str, body: bytes, writer: asyncio.StreamWriter) -> None:
        parts = [p for p in path.split("/") if p]
        if len(parts) != 3 or parts[2] not in _SESSION_ACTIONS:
            writer.write(_json_response(404, {"error": f"no route {path}"}))
            return
        _, agent_id, action = parts
        payload = json.loads(body.decode("utf-8")) if body else {}
        reason = str(payload.get("reason", ""))
        self.controller.transition(agent_id, action, reason=reason)
        session = self.controller.sessions[agent_id]
        writer.write(_json_response(200, {"id": agent_id, "state": session.state.value}))

    def _approval_action(self, path: str, body: bytes, writer: asyncio.StreamWriter) -> None:
        parts = [p for p in path.split("/") if p]
        if len(parts) != 2:
            writer.write(_json_response(404, {"error": f"no route {path}"}))
            return
        approval_id = parts[1]
        if approval_id not in self.controller.approvals:
            writer.write(_json_response(404, {"error": f"unknown approval {approval_id!r}"}))
            return
        payload = json.loads(body.decode("utf-8")) if body else {}
        decision = payload.get("decision", "")
        self.controller.resolve_approval(approval_id, decision)
        writer.write(_json_response(200, self.controller.approvals[approval_id].to_dict()))

    async def _stream_events(
        self, headers: dict[str, str], query: dict[str, list[str]], writer: asyncio.StreamWriter
    ) -> None:
        """Replay history then follow live events as server-sent events."""
        since = -1
        if "last-event-id" in headers:
            try:
                since = int(headers["last-event-id"])
            except ValueError:
                since = -1
        if "since" in query:
            try:
                since = int(query["since"][0])
            except ValueError:
                since = -1
        head = [
            "HTTP/1.1 200 OK",
            "Content-Type: text/event-stream",
            "Cache-Control: no-cache",
            "Connection: keep-alive",
        ]
        head.extend(f"{k}: {v}" for k, v in _CORS_HEADERS)
        writer.write(("\r\n".join(head) + "\r\n\r\n").encode("ascii"))
        await writer.drain()

        sub = self.controller.subscribe()
        try:
            last_sent = since
            for event in list(self.controller.events):
                if event.seq > since:
                    writer.write(_sse_frame(event.seq, event.to_dict()))
                    last_sent = event.seq
            await writer.drain()
            dropped_reported = 0
            while True:
                event = await sub.queue.get()
                if sub.dropped > dropped_reported:
                    writer.write(
                        _sse_frame(
                            event.seq,
                            {"name": "hitl.stream.dropped", "detail": {"count": sub.dropped - dropped_reported}},
                        )
                    )
                    dropped_reported = sub.dropped
                if event.seq <= last_sent:
                    continue
                writer.write(_sse_frame(event.seq, event.to_dict()))
                last_sent = event.seq
                await writer.drain()
        except (ConnectionResetError, BrokenPipeError, asyncio.CancelledError):
            pass
        finally:
            self.controller.unsubscribe(sub)

    def _serve_static(self, path: str, writer: asyncio.StreamWriter) -> None:
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.console_dir, rel))
        root = os.path.realpath(self.console_dir)
        if not full.startswith(root + os.sep) and full != root:
            writer.write(_json_response(404, {"error": "not found"}))
            return
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            writer.write(_json_response(404, {"error": "not found"}))
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            writer.write(_response(200, fh.read(), content_type=ctype))


def _sse_frame(event_id: int, payload: dict[str, Any]) -> bytes:
    return f"id: {event_id}\ndata: {json.dumps(payload)}\n\n".encode("utf-8")


async def serve_control_api(
    controller: HitlController,
    audit_path: str | None = None,
    host: str = "127.0.0.1",
    port: int = 8787,
    console_dir: str | None = None,
) -> ControlApiServer:
    server = ControlApiServer(
        controller, audit_path=audit_path, host=host, port=port, console_dir=console_dir
    )
    await server.start()
    return server
