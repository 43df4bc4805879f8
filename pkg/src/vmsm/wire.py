"""Bit-exact wire format for setup upload and per-query traffic.

Every message is a self-delimiting frame:

    msg_type (1 byte) || version (1 byte, 0x01) || payload_len (4 bytes,
    big-endian) || payload

Message types: 0x01 SETUP_UPLOAD, 0x02 QUERY, 0x03 RESPONSE, 0x04 ERROR.
Unknown types or versions fail decoding; they are never skipped silently.

Payload layouts (all lengths big-endian, all scalar cells little-endian
32-byte strings, all point cells 32-byte canonical encodings):

    setup body: flags (1, bit0 = bases present) || n (8) || merged cells
                (n * 32) || optional bases cells (n * 32)
    query:      session_id (16) || n (8) || coefficient cells (n * 32)
    response:   A cell (32) || B cell (32)   -- 64 bytes, independent of n
    error:      code (1) || utf-8 detail (variable)

The response being two fixed-size cells is what keeps per-query downlink
communication constant in n.

This module deliberately has no encoder for ProtocolSecretKey: secret key
material never crosses the wire in any message.

The format carries no authentication; deployments are expected to run it
over a transport that provides message authenticity.
"""

from __future__ import annotations

import struct

from .msm import BasesVector, CoefficientVector
from .protocol import QueryResponse

VERSION = 0x01

MSG_SETUP_UPLOAD = 0x01
MSG_QUERY = 0x02
MSG_RESPONSE = 0x03
MSG_ERROR = 0x04

_KNOWN_TYPES = frozenset((MSG_SETUP_UPLOAD, MSG_QUERY, MSG_RESPONSE, MSG_ERROR))

_HEADER = struct.Struct(">BBI")

SESSION_ID_BYTES = 16
_MAX_N = 1 << 32


class WireDecodeError(ValueError):
    """Raised for any malformed, truncated, or non-canonical message."""


def encode_message(msg_type: int, payload: bytes) -> bytes:
    if msg_type not in _KNOWN_TYPES:
        raise ValueError(f"unknown message type 0x{msg_type:02x}")
    return _HEADER.pack(msg_type, VERSION, len(payload)) + payload


def decode_message(data: bytes) -> tuple[int, bytes]:
    """Split one frame into (msg_type, payload), validating exact length."""
    if len(data) < _HEADER.size:
        raise WireDecodeError("truncated message header")
    msg_type, version, payload_len = _HEADER.unpack_from(data)
    if version != VERSION:
        raise WireDecodeError(f"unsupported version 0x{version:02x}")
    if msg_type not in _KNOWN_TYPES:
        raise WireDecodeError(f"unknown message type 0x{msg_type:02x}")
    payload = data[_HEADER.size :]
    if len(payload) != payload_len:
        raise WireDecodeError(
            f"payload length field says {payload_len}, got {len(payload)} bytes"
        )
    return msg_type, payload


def read_message(stream) -> tuple[int, bytes]:
    """Read one frame from a file-like stream (socket makefile)."""
    header = stream.read(_HEADER.size)
    if not header:
        raise EOFError("connection closed")
    if len(header) < _HEADER.size:
        raise WireDecodeError("truncated message header")
    msg_type, version, payload_len = _HEADER.unpack(header)
    payload = stream.read(payload_len) if payload_len else b""
    if len(payload) != payload_len:
        raise WireDecodeError("connection closed mid-payload")
    if version != VERSION:
        raise WireDecodeError(f"unsupported version 0x{version:02x}")
    if msg_type not in _KNOWN_TYPES:
        raise WireDecodeError(f"unknown message type 0x{msg_type:02x}")
    return msg_type, payload


def _take(data: bytes, offset: int, count: int, what: str) -> tuple[bytes, int]:
    end = offset + count
    if end > len(data):
        raise WireDecodeError(f"truncated while reading {what}")
    return data[offset:end], end


def encode_setup(merged_t: BasesVector, bases_p: BasesVector | None = None) -> bytes:
    """Setup body: flags || n || merged cells || optional bases cells."""
    if bases_p is not None and len(bases_p) != len(merged_t):
        raise ValueError("bases and merged vectors must have equal length")
    n = len(merged_t)
    if n >= _MAX_N:
        raise ValueError(f"setup of {n} elements exceeds the wire limit")
    desc = merged_t.descriptor
    parts = [bytes([1 if bases_p is not None else 0]), n.to_bytes(8, "big")]
    parts += [desc.element_to_cell(e) for e in merged_t]
    if bases_p is not None:
        parts += [desc.element_to_cell(e) for e in bases_p]
    return b"".join(parts)


def decode_setup(payload: bytes, descriptor):
    """Inverse of encode_setup; returns (merged_T, bases_P or None)."""
    flags_b, off = _take(payload, 0, 1, "setup flags")
    flags = flags_b[0]
    if flags > 1:
        raise WireDecodeError(f"unknown setup flags 0x{flags:02x}")
    n_b, off = _take(payload, off, 8, "setup length")
    n = int.from_bytes(n_b, "big")
    if n < 1:
        raise WireDecodeError("setup must carry at least one element")
    if n >= _MAX_N:
        raise WireDecodeError("setup length exceeds the wire limit")
    merged, off = _decode_cells(payload, off, n, descriptor, "merged bases")
    bases = None
    if flags & 1:
        bases, off = _decode_cells(payload, off, n, descriptor, "bases")
    if off != len(payload):
        raise WireDecodeError("trailing bytes after setup body")
    return merged, bases


def _decode_cells(payload, off, n, descriptor, what):
    elements = []
    for _ in range(n):
        cell, off = _take(payload, off, 32, what)
        try:
            elements.append(descriptor.element_from_cell(cell))
        except ValueError as exc:
            raise WireDecodeError(f"invalid {what} encoding: {exc}") from exc
    return BasesVector(descriptor, elements), off


def encode_query(session_id: bytes, x: CoefficientVector) -> bytes:
    """Query payload: session_id || n || coefficient cells."""
    if len(session_id) != SESSION_ID_BYTES:
        raise ValueError(f"session id must be {SESSION_ID_BYTES} bytes")
    desc = x.descriptor
    parts = [bytes(session_id), len(x).to_bytes(8, "big")]
    parts += [desc.scalar_to_bytes32(s) for s in x]
    return b"".join(parts)


def decode_query(payload: bytes, descriptor):
    sid, off = _take(payload, 0, SESSION_ID_BYTES, "session id")
    n_b, off = _take(payload, off, 8, "query length")
    n = int.from_bytes(n_b, "big")
    if n < 1:
        raise WireDecodeError("query must carry at least one coefficient")
    scalars = []
    for _ in range(n):
        cell, off = _take(payload, off, 32, "coefficient")
        try:
            scalars.append(descriptor.scalar_from_bytes32(cell))
        except ValueError as exc:
            raise WireDecodeError(f"invalid coefficient encoding: {exc}") from exc
    if off != len(payload):
        raise WireDecodeError("trailing bytes after query body")
    return sid, CoefficientVector(descriptor, scalars)


def encode_response(resp: QueryResponse) -> bytes:
    """Response payload: exactly the two 32-byte element cells."""
    return resp.A.to_cell() + resp.B.to_cell()


def decode_response(payload: bytes, descriptor) -> QueryResponse:
    if len(payload) != 64:
        raise WireDecodeError(f"response payload must be 64 bytes, got {len(payload)}")
    try:
        a = descriptor.element_from_cell(payload[:32])
        b = descriptor.element_from_cell(payload[32:])
    except ValueError as exc:
        raise WireDecodeError(f"invalid response element: {exc}") from exc
    return QueryResponse(A=a, B=b)


def encode_error(code: int, detail: str = "") -> bytes:
    if not 0 <= code <= 0xFF:
        raise ValueError("error code must fit one byte")
    return bytes([code]) + detail.encode("utf-8")


def decode_error(payload: bytes) -> tuple[int, str]:
    if len(payload) < 1:
        raise WireDecodeError("empty error payload")
    try:
        detail = payload[1:].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireDecodeError("undecodable error detail") from exc
    return payload[0], detail
