"""Length-prefixed binary wire protocol.

Frame layout: u32 big-endian payload length | u8 message type | payload.
Frames are raw RGB8, row-major, frame-major; structured payloads are JSON.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ProtocolError

MSG_INIT = 0x01
MSG_CONTROL_BLOCK = 0x02
MSG_GENERATED_BLOCK = 0x03
MSG_STATS = 0x04
MSG_ERROR = 0x05
MSG_CLOSE = 0x06

KNOWN_TYPES = (MSG_INIT, MSG_CONTROL_BLOCK, MSG_GENERATED_BLOCK, MSG_STATS,
               MSG_ERROR, MSG_CLOSE)

MAX_PAYLOAD = 16 * 1024 * 1024
HEADER = struct.Struct(">IB")


@dataclass(frozen=True)
class WireMessage:
    type: int
    payload: bytes


def encode_message(msg: WireMessage) -> bytes:
    if len(msg.payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload {len(msg.payload)} exceeds {MAX_PAYLOAD}")
    return HEADER.pack(len(msg.payload), msg.type) + msg.payload


def decode_message(buf: bytes | memoryview):
    """(message, bytes_consumed) or None if the buffer is incomplete."""
    if len(buf) < HEADER.size:
        return None
    length, mtype = HEADER.unpack_from(buf)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"payload {length} exceeds {MAX_PAYLOAD}")
    end = HEADER.size + length
    if len(buf) < end:
        return None
    return WireMessage(type=mtype, payload=bytes(buf[HEADER.size:end])), end


def read_message(rfile) -> WireMessage | None:
    """Blocking read of one frame from a file-like socket; None on EOF."""
    head = rfile.read(HEADER.size)
    if not head:
        return None
    if len(head) < HEADER.size:
        raise ProtocolError("truncated header")
    length, mtype = HEADER.unpack(head)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"payload {length} exceeds {MAX_PAYLOAD}")
    payload = b""
    while len(payload) < length:
        chunk = rfile.read(length - len(payload))
        if not chunk:
            raise ProtocolError("truncated payload")
        payload += chunk
    return WireMessage(type=mtype, payload=payload)


# -- payload codecs -----------------------------------------------------------

def frames_to_bytes(frames_u8: np.ndarray) -> bytes:
    return np.ascontiguousarray(frames_u8, dtype=np.uint8).tobytes()


def bytes_to_frames(payload: bytes, n: int, h: int, w: int) -> np.ndarray:
    expected = n * h * w * 3
    if len(payload) != expected:
        raise ProtocolError(f"frame payload is {len(payload)} bytes, "
                            f"expected {expected} for {n}x{h}x{w}x3")
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, h, w, 3).copy()


def encode_init(options: dict, first_frame_u8: np.ndarray) -> WireMessage:
    h, w = first_frame_u8.shape[:2]
    opts = dict(options)
    opts["h"], opts["w"] = int(h), int(w)
    blob = json.dumps(opts).encode()
    payload = struct.pack(">I", len(blob)) + blob + frames_to_bytes(first_frame_u8[None])
    return WireMessage(MSG_INIT, payload)


def decode_init(payload: bytes):
    if len(payload) < 4:
        raise ProtocolError("INIT payload too short")
    (jlen,) = struct.unpack_from(">I", payload)
    if len(payload) < 4 + jlen:
        raise ProtocolError("INIT options truncated")
    try:
        options = json.loads(payload[4:4 + jlen].decode())
        h, w = int(options["h"]), int(options["w"])
    except (ValueError, KeyError) as exc:
        raise ProtocolError(f"bad INIT options: {exc}") from exc
    frame = bytes_to_frames(payload[4 + jlen:], 1, h, w)[0]
    return options, frame


def encode_stats(stats: dict) -> WireMessage:
    return WireMessage(MSG_STATS, json.dumps(stats).encode())


def decode_stats(payload: bytes) -> dict:
    return json.loads(payload.decode())


def encode_error(code: str, message: str) -> WireMessage:
    return WireMessage(MSG_ERROR, json.dumps({"code": code, "message": message}).encode())


def decode_error(payload: bytes) -> dict:
    return json.loads(payload.decode())
