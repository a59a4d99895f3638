"""Minimal RFC 6455 WebSocket client over a blocking socket.

Just enough protocol for a browser debugging session: text frames in both
directions, client-side masking, ping/pong, fragmentation, and the close
handshake.  Not a general-purpose implementation (no extensions, no
subprotocols, no TLS).
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct
import time
from urllib.parse import urlparse

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_OP_CONT = 0x0
_OP_TEXT = 0x1
_OP_BINARY = 0x2
_OP_CLOSE = 0x8
_OP_PING = 0x9
_OP_PONG = 0xA


class WebSocketError(Exception):
    pass


class WebSocketClosed(WebSocketError):
    """The peer completed or initiated the closing handshake."""


class WebSocket:
    """A connected client-side WebSocket carrying text messages."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buffer = b""
        self._closed = False

    @classmethod
    def connect(cls, url: str, timeout: float = 10.0) -> "WebSocket":
        """Open and upgrade a ws:// connection."""
        parsed = urlparse(url)
        if parsed.scheme != "ws":
            raise WebSocketError(f"unsupported scheme {parsed.scheme!r} (only ws://)")
        host = parsed.hostname or "127.0.0.1"
        port = parsed.port or 80
        path = parsed.path or "/"
        if parsed.query:
            path += "?" + parsed.query

        key = base64.b64encode(os.urandom(16)).decode("ascii")
        sock = socket.create_connection((host, port), timeout=timeout)
        try:
            handshake = (
                f"GET {path} HTTP/1.1\r\n"
                f"Host: {host}:{port}\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Key: {key}\r\n"
                "Sec-WebSocket-Version: 13\r\n"
                "\r\n"
            )
            sock.sendall(handshake.encode("ascii"))
            response = cls._read_http_response(sock)
            status_line = response.split(b"\r\n", 1)[0]
            if b" 101 " not in status_line + b" ":
                raise WebSocketError(f"upgrade refused: {status_line.decode(errors='replace')}")
            accept = _header_value(response, b"sec-websocket-accept")
            expected = base64.b64encode(
                hashlib.sha1((key + _GUID).encode("ascii")).digest()
            ).decode("ascii")
            if accept != expected:
                raise WebSocketError("Sec-WebSocket-Accept mismatch")
        except Exception:
            sock.close()
            raise
        return cls(sock)

    def send_text(self, payload: str) -> None:
        self._send_frame(_OP_TEXT, payload.encode("utf-8"))

    def recv_text(self, timeout: float = 30.0) -> str:
        """Receive the next complete text message, transparently answering pings."""
        deadline = time.monotonic() + timeout
        message = bytearray()
        expecting_continuation = False
        while True:
            opcode, fin, payload = self._recv_frame(deadline)
            if opcode == _OP_PING:
                self._send_frame(_OP_PONG, payload)
                continue
            if opcode == _OP_PONG:
                continue
            if opcode == _OP_CLOSE:
                if not self._closed:
                    self._send_frame(_OP_CLOSE, payload[:2])
                    self._closed = True
                raise WebSocketClosed("peer closed the connection")
            if opcode == _OP_BINARY:
                raise WebSocketError("unexpected binary frame")
            if opcode == _OP_TEXT:
                if expecting_continuation:
                    raise WebSocketError("interleaved message start")
                message.extend(payload)
            elif opcode == _OP_CONT:
                if not expecting_continuation:
                    raise WebSocketError("continuation without start frame")
                message.extend(payload)
            else:
                raise WebSocketError(f"unsupported opcode {opcode:#x}")
            if fin:
                return message.decode("utf-8")
            expecting_continuation = True

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._send_frame(_OP_CLOSE, struct.pack("!H", 1000))
            except OSError:
                pass
        try:
            self._sock.close()
        except OSError:
            pass

    # -- framing -----------------------------------------------------------

    def _send_frame(self, opcode: int, payload: bytes) -> None:
        header = bytearray([0x80 | opcode])
        length = len(payload)
        if length <= 125:
            header.append(0x80 | length)
        elif length <= 0xFFFF:
            header.append(0x80 | 126)
            header.extend(struct.pack("!H", length))
        else:
            header.append(0x80 | 127)
            header.extend(struct.pack("!Q", length))
        mask = os.urandom(4)
        header.extend(mask)
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        self._sock.sendall(bytes(header) + masked)

    def _recv_frame(self, deadline: float) -> tuple[int, bool, bytes]:
        first = self._read_exact(2, deadline)
        fin = bool(first[0] & 0x80)
        opcode = first[0] & 0x0F
        masked = bool(first[1] & 0x80)
        length = first[1] & 0x7F
        if length == 126:
            length = struct.unpack("!H", self._read_exact(2, deadline))[0]
        elif length == 127:
            length = struct.unpack("!Q", self._read_exact(8, deadline))[0]
        mask = self._read_exact(4, deadline) if masked else None
        payload = self._read_exact(length, deadline)
        if mask is not None:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return opcode, fin, payload

    def _read_exact(self, n: int, deadline: float) -> bytes:
        while len(self._buffer) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise WebSocketError("timed out waiting for frame data")
            self._sock.settimeout(min(remaining, 5.0))
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                continue
            if not chunk:
                raise WebSocketClosed("socket closed mid-frame")
            self._buffer += chunk
        data, self._buffer = self._buffer[:n], self._buffer[n:]
        return data

    @staticmethod
    def _read_http_response(sock: socket.socket) -> bytes:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = sock.recv(4096)
            if not chunk:
                raise WebSocketError("connection closed during handshake")
            data += chunk
            if len(data) > 65536:
                raise WebSocketError("oversized handshake response")
        return data.split(b"\r\n\r\n", 1)[0]


def _header_value(response: bytes, name: bytes) -> str | None:
    for line in response.split(b"\r\n")[1:]:
        if b":" not in line:
            continue
        key, value = line.split(b":", 1)
        if key.strip().lower() == name:
            return value.strip().decode("ascii")
    return None
