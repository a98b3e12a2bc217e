"""Enforcing HTTP/1.1 forward proxy over the egress decision engine.

Absolute-form requests and CONNECT tunnels are checked per request against
the engine; denials answer 403 with the reason token in the body and leave
one audit record. Decisions use only the request target's authority, so a
spoofed Host header is irrelevant by construction. An /admin surface allows
runtime allowlist widening, which the engine refuses while frozen (enclaved).
"""

from __future__ import annotations

import json
import logging
import select
import socket
import socketserver
import threading
from urllib.parse import urlsplit

from .egress import EgressEngine, EgressTarget, normalize_target
from .errors import GuardFrozenError, NormalizationError

logger = logging.getLogger(__name__)

_MAX_HEAD = 64 * 1024
_TUNNEL_CHUNK = 65536


def _recv_head(sock: socket.socket) -> bytes:
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            break
        data += chunk
        if len(data) > _MAX_HEAD:
            raise NormalizationError("request head too large")
    return data


def _plain_response(status: int, reason: str, body: bytes, content_type: str = "text/plain") -> bytes:
    head = (
        f"HTTP/1.1 {status} {reason}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n\r\n"
    )
    return head.encode("ascii") + body


class _ProxyHandler(socketserver.BaseRequestHandler):
    server: "ProxyServer"

    def handle(self) -> None:  # noqa: C901 - one dispatch point is clearer here
        try:
            head = _recv_head(self.request)
        except (OSError, NormalizationError):
            return
        if not head:
            return
        header_blob, _, initial_body = head.partition(b"\r\n\r\n")
        lines = header_blob.decode("latin-1", errors="replace").split("\r\n")
        try:
            method, target, _version = lines[0].split(" ", 2)
        except ValueError:
            self.request.sendall(_plain_response(400, "Bad Request", b"malformed request line"))
            return
        headers: dict[str, str] = {}
        for line in lines[1:]:
            if ":" in line:
                key, _, value = line.partition(":")
                headers[key.strip().lower()] = value.strip()
        try:
            if method.upper() == "CONNECT":
                self._handle_connect(target)
            elif target.startswith("/"):
                self._handle_admin(method.upper(), target, headers, initial_body)
            else:
                self._handle_absolute(method.upper(), target, headers, initial_body)
        except NormalizationError as exc:
            self.request.sendall(_plain_response(400, "Bad Request", str(exc).encode("utf-8")))
        except OSError as exc:
            logger.debug("proxy I/O error: %s", exc)

    # -- CONNECT tunneling --------------------------------------------------

    def _handle_connect(self, target: str) -> None:
        host, _, port_text = target.rpartition(":")
        if not host or not port_text.isdigit():
            self.request.sendall(_plain_response(400, "Bad Request", b"bad CONNECT target"))
            return
        host = host.strip("[]").lower()
        port = int(port_text)
        decision = self.server.engine.enforce(
            EgressTarget(scheme="https", host=host, port=port, had_credentials=False)
        )
        if not decision.allow and decision.enforced:
            self.request.sendall(
                _plain_response(403, "Forbidden", decision.reason.encode("ascii"))
            )
            return
        try:
            upstream = socket.create_connection((host, port), timeout=10)
        except OSError as exc:
            self.request.sendall(_plain_response(502, "Bad Gateway", str(exc).encode("utf-8")))
            return
        self.request.sendall(b"HTTP/1.1 200 Connection Established\r\n\r\n")
        self._pump(self.request, upstream)

    def _pump(self, a: socket.socket, b: socket.socket) -> None:
        with b:
            sockets = [a, b]
            while True:
                readable, _, errored = select.select(sockets, [], sockets, 30)
                if errored or not readable:
                    return
                for sock in readable:
                    try:
                        data = sock.recv(_TUNNEL_CHUNK)
                    except OSError:
                        return
                    if not data:
                        return
                    peer = b if sock is a else a
                    try:
                        peer.sendall(data)
                    except OSError:
                        return

    # -- absolute-form forwarding --------------------------------------------

    def _handle_absolute(
        self, method: str, target: str, headers: dict[str, str], initial_body: bytes
    ) -> None:
        proxied_target = normalize_target(target)
        decision = self.server.engine.enforce(proxied_target)
        if not decision.allow and decision.enforced:
            self.request.sendall(
                _plain_response(403, "Forbidden", decision.reason.encode("ascii"))
            )
            return
        parts = urlsplit(target)
        origin_path = parts.path or "/"
        if parts.query:
            origin_path += "?" + parts.query
        length = int(headers.get("content-length", "0") or "0")
        body = initial_body
        while len(body) < length:
            chunk = self.request.recv(4096)
            if not chunk:
                break
            body += chunk
        out = [f"{method} {origin_path} HTTP/1.1", f"Host: {proxied_target.host}"]
        for key, value in headers.items():
            if key in ("host", "proxy-connection", "connection"):
                continue
            out.append(f"{key}: {value}")
        out.append("Connection: close")
        request_blob = ("\r\n".join(out) + "\r\n\r\n").encode("latin-1") + body
        try:
            upstream = socket.create_connection(
                (proxied_target.host, proxied_target.port), timeout=10
            )
        except OSError as exc:
            self.request.sendall(_plain_response(502, "Bad Gateway", str(exc).encode("utf-8")))
            return
        with upstream:
            upstream.sendall(request_blob)
            while True:
                data = upstream.recv(_TUNNEL_CHUNK)
                if not data:
                    break
                self.request.sendall(data)

    # -- admin surface ---------------------------------------------------------

    def _handle_admin(
        self, method: str, target: str, headers: dict[str, str], initial_body: bytes
    ) -> None:
        if method == "GET" and target == "/admin/policy":
            policy = self.server.engine.policy
            body = json.dumps(
                {
                    "frozen": self.server.engine.frozen,
                    "hostAllowlist": sorted(getattr(policy, "host_allowlist", ())),
                    "requireVpnGateway": getattr(policy, "require_vpn_gateway", False),
                    "vpnCidrs": list(getattr(policy, "vpn_cidrs", ())),
                }
            ).encode("utf-8")
            self.request.sendall(_plain_response(200, "OK", body, "application/json"))
            return
        if method == "POST" and target == "/admin/allowlist":
            length = int(headers.get("content-length", "0") or "0")
            body = initial_body
            while len(body) < length:
                chunk = self.request.recv(4096)
                if not chunk:
                    break
                body += chunk
            try:
                host = json.loads(body.decode("utf-8")).get("host", "")
            except (json.JSONDecodeError, UnicodeDecodeError):
                self.request.sendall(_plain_response(400, "Bad Request", b"invalid JSON"))
                return
            try:
                self.server.engine.add_host(host)
            except GuardFrozenError as exc:
                self.request.sendall(_plain_response(403, "Forbidden", str(exc).encode("utf-8")))
                return
            self.request.sendall(
                _plain_response(200, "OK", json.dumps({"added": host}).encode("utf-8"), "application/json")
            )
            return
        self.request.sendall(_plain_response(404, "Not Found", b"unknown admin route"))


class ProxyServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, engine: EgressEngine, bind: tuple[str, int] = ("127.0.0.1", 0)):
        self.engine = engine
        super().__init__(bind, _ProxyHandler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]


def serve_proxy(
    engine: EgressEngine, bind: tuple[str, int] = ("127.0.0.1", 8888), background: bool = True
) -> ProxyServer:
    """Start the forward proxy; bind failure is fatal and propagates."""
    server = ProxyServer(engine, bind)
    if background:
        thread = threading.Thread(
            target=lambda: server.serve_forever(poll_interval=0.05),
            name="egress-proxy",
            daemon=True,
        )
        thread.start()
    return server
