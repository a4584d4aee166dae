"""Streaming server: raw TCP framing plus a browser-compatible WebSocket
upgrade of the same byte protocol, and a minimal HTTP path for the client
page and first-frame gallery.

One connection = one session. The first bytes of a connection select the
transport: HTTP verbs route to the web handler, anything else is the raw
length-prefixed protocol. WebSocket binary messages each carry one complete
wire frame (identical bytes to the raw transport).
"""

import base64
import hashlib
import io
import json
import socket
import socketserver
import struct
import threading
import time
from pathlib import Path

from ..errors import ProtocolError
from ..sprite_world.clip import from_uint8, to_uint8
from . import protocol as proto

WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class EchoBackend:
    """Identity generator for UI testing without trained weights."""

    def __init__(self, options, first_frame):
        self.h, self.w = first_frame.shape[:2]
        self.frames_emitted = 1
        self.blocks = 0
        self.last_block_ms = 0.0
        self._t0 = time.perf_counter()

    def push_control_block(self, frames):
        t0 = time.perf_counter()
        out = frames.copy()
        self.frames_emitted += frames.shape[0]
        self.blocks += 1
        self.last_block_ms = (time.perf_counter() - t0) * 1000.0
        return out

    def stats_snapshot(self):
        wall = time.perf_counter() - self._t0
        return {"fps": self.frames_emitted / max(wall, 1e-9),
                "last_block_ms": self.last_block_ms,
                "frames_emitted": self.frames_emitted}


class SessionBackend:
    """Adapter from a live Session to the wire handler."""

    def __init__(self, session):
        self.session = session
        self.h, self.w = session.h, session.w

    def push_control_block(self, frames):
        return self.session.push_control_block(frames)

    def stats_snapshot(self):
        return self.session.stats.snapshot()


def echo_factory(options, first_frame):
    return EchoBackend(options, first_frame)


def model_factory(model, codec, schedule, default_window=16):
    from ..stream.session import Session, SessionOptions

    def factory(options, first_frame):
        opts = SessionOptions(seed=int(options.get("seed", 0)),
                              window=options.get("window", default_window),
                              schedule=schedule)
        return SessionBackend(Session(model, codec, first_frame, opts))

    return factory


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        sock: socket.socket = self.request
        sock.settimeout(120)
        try:
            head = sock.recv(4, socket.MSG_PEEK)
        except OSError:
            return
        if not head:
            return
        if head[:3] in (b"GET", b"POS", b"HEA", b"PUT", b"DEL", b"OPT"):
            self._handle_http(sock)
        else:
            rfile = sock.makefile("rb")
            try:
                self._wire_loop(proto_read=lambda: proto.read_message(rfile),
                                send=lambda m: sock.sendall(proto.encode_message(m)))
            finally:
                rfile.close()

    # -- shared wire-session logic -------------------------------------------

    def _wire_loop(self, proto_read, send):
        backend = None
        while True:
            try:
                msg = proto_read()
            except ProtocolError as exc:
                send(proto.encode_error("malformed", str(exc)))
                send(proto.WireMessage(proto.MSG_CLOSE, b""))
                return
            if msg is None:
                return
            try:
                done, backend = self._dispatch(msg, send, backend)
            except ProtocolError as exc:
                send(proto.encode_error("protocol", str(exc)))
                send(proto.WireMessage(proto.MSG_CLOSE, b""))
                return
            except Exception as exc:  # runtime failure inside the model path
                send(proto.encode_error("internal", repr(exc)))
                send(proto.WireMessage(proto.MSG_CLOSE, b""))
                return
            if done:
                return

    def _dispatch(self, msg, send, backend):
        if msg.type == proto.MSG_INIT:
            if backend is not None:
                raise ProtocolError("session already initialized")
            options, frame_u8 = proto.decode_init(msg.payload)
            factory = (echo_factory if options.get("echo")
                       else self.server.backend_factory)
            backend = factory(options, from_uint8(frame_u8))
            send(proto.encode_stats(backend.stats_snapshot()))
            return False, backend
        if msg.type == proto.MSG_CONTROL_BLOCK:
            if backend is None:
                send(proto.encode_error("uninitialized",
                                        "CONTROL_BLOCK before INIT"))
                send(proto.WireMessage(proto.MSG_CLOSE, b""))
                return True, backend
            frames_u8 = proto.bytes_to_frames(msg.payload, 4, backend.h, backend.w)
            out = backend.push_control_block(from_uint8(frames_u8))
            send(proto.WireMessage(proto.MSG_GENERATED_BLOCK,
                                   proto.frames_to_bytes(to_uint8(out))))
            send(proto.encode_stats(backend.stats_snapshot()))
            return False, backend
        if msg.type == proto.MSG_CLOSE:
            return True, backend
        send(proto.encode_error("unknown-type", f"message type {msg.type:#x}"))
        send(proto.WireMessage(proto.MSG_CLOSE, b""))
        return True, backend

    # -- HTTP / WebSocket ------------------------------------------------------

    def _handle_http(self, sock: socket.socket):
        rfile = sock.makefile("rb")
        try:
            request = b""
            while b"\r\n\r\n" not in request:
                chunk = rfile.read1(4096)
                if not chunk:
                    return
                request += chunk
                if len(request) > 65536:
                    return
            head = request.split(b"\r\n\r\n", 1)[0].decode("latin-1")
            lines = head.split("\r\n")
            method, path, _ = lines[0].split(" ", 2)
            headers = {}
            for line in lines[1:]:
                if ":" in line:
                    k, v = line.split(":", 1)
                    headers[k.strip().lower()] = v.strip()
            if headers.get("upgrade", "").lower() == "websocket":
                self._handle_websocket(sock, rfile, headers)
            else:
                self._serve_static(sock, method, path)
        finally:
            rfile.close()

    def _serve_static(self, sock, method, path):
        if method != "GET":
            _http_response(sock, 405, b"method not allowed")
            return
        if path in ("/gallery.json", "/gallery"):
            body = json.dumps(self.server.gallery()).encode()
            _http_response(sock, 200, body, "application/json")
            return
        static = self.server.static_dir
        if static is None:
            _http_response(sock, 404, b"no static content")
            return
        rel = "index.html" if path == "/" else path.lstrip("/")
        target = (Path(static) / rel).resolve()
        if not str(target).startswith(str(Path(static).resolve())) or not target.is_file():
            _http_response(sock, 404, b"not found")
            return
        ctype = {"html": "text/html", "js": "text/javascript",
                 "css": "text/css", "map": "application/json"}.get(
            target.suffix.lstrip("."), "application/octet-stream")
        _http_response(sock, 200, target.read_bytes(), ctype)

    def _handle_websocket(self, sock, rfile, headers):
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_MAGIC).encode()).digest()).decode()
        sock.sendall(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            + f"Sec-WebSocket-Accept: {accept}\r\n\r\n".encode())

        def send(m: proto.WireMessage):
            sock.sendall(ws_frame(proto.encode_message(m)))

        def read_one():
            while True:
                frame = read_ws_frame(rfile)
                if frame is None:
                    return None
                opcode, payload = frame
                if opcode == 0x8:  # close
                    return None
                if opcode == 0x9:  # ping
                    sock.sendall(ws_frame(payload, opcode=0xA))
                    continue
                if opcode in (0x1, 0x2):
                    decoded = proto.decode_message(payload)
                    if decoded is None:
                        raise ProtocolError("websocket message holds an "
                                            "incomplete wire frame")
                    return decoded[0]

        self._wire_loop(proto_read=read_one, send=send)


def _http_response(sock, status, body: bytes, ctype="text/plain"):
    reason = {200: "OK", 404: "Not Found", 405: "Method Not Allowed"}.get(status, "")
    sock.sendall((f"HTTP/1.1 {status} {reason}\r\nContent-Type: {ctype}\r\n"
                  f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n"
                  ).encode() + body)


def ws_frame(payload: bytes, opcode: int = 0x2) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 65536:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def read_ws_frame(rfile):
    """(opcode, payload) for one frame; None on EOF. Client frames are masked."""
    b1 = rfile.read(1)
    if not b1:
        return None
    b2 = rfile.read(1)
    if not b2:
        return None
    opcode = b1[0] & 0x0F
    masked = bool(b2[0] & 0x80)
    n = b2[0] & 0x7F
    if n == 126:
        n = struct.unpack(">H", rfile.read(2))[0]
    elif n == 127:
        n = struct.unpack(">Q", rfile.read(8))[0]
    if n > proto.MAX_PAYLOAD + proto.HEADER.size:
        raise ProtocolError(f"websocket frame of {n} bytes exceeds limit")
    mask = rfile.read(4) if masked else b"\x00" * 4
    payload = b""
    while len(payload) < n:
        chunk = rfile.read(n - len(payload))
        if not chunk:
            raise ProtocolError("truncated websocket frame")
        payload += chunk
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


class StreamServer:
    """Threaded server; one backend session per connection."""

    def __init__(self, backend_factory=echo_factory, host="127.0.0.1", port=0,
                 static_dir=None, gallery_frames=None):
        self._tcp = socketserver.ThreadingTCPServer((host, port), _Handler,
                                                    bind_and_activate=True)
        self._tcp.daemon_threads = True
        self._tcp.allow_reuse_address = True
        self._tcp.backend_factory = backend_factory
        self._tcp.static_dir = static_dir
        self._tcp.gallery = lambda: _gallery_payload(gallery_frames or [])
        self._thread = None

    @property
    def address(self):
        return self._tcp.server_address

    def start(self):
        self._thread = threading.Thread(target=self._tcp.serve_forever,
                                        kwargs={"poll_interval": 0.05},
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread:
            self._thread.join(timeout=5)


def _gallery_payload(gallery_frames):
    from PIL import Image

    out = []
    for gid, frame_u8 in gallery_frames:
        buf = io.BytesIO()
        Image.fromarray(frame_u8, mode="RGB").save(buf, format="PNG")
        out.append({"id": gid, "h": int(frame_u8.shape[0]), "w": int(frame_u8.shape[1]),
                    "png_base64": base64.b64encode(buf.getvalue()).decode()})
    return {"frames": out}
