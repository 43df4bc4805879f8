"""Networked outsourcing service: session-caching server and client.

The server holds (bases, merged bases) per session and answers queries
with the dual MSM.  Sessions are identified by a 16-byte id chosen by the
client; the id travels as a prefix of the SETUP_UPLOAD payload and in
every QUERY.  Malformed input of any kind produces a wire ERROR message
and leaves the connection usable.

The transport is a plain stream socket carrying the self-delimiting
frames from vmsm.wire.  Authenticity of the channel is an environment
assumption; run the service behind an authenticated transport when the
network is untrusted.

Fault-injection server modes (corrupt-first, partial-sum, random-b)
exist so clients and tests can exercise rejection paths; the default
mode is honest.
"""

from __future__ import annotations

import logging
import os
import secrets
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field

from . import wire
from .groups import GroupDescriptor, PRODUCTION, TOY, make_group
from .msm import BasesVector, CoefficientVector, msm_naive
from .protocol import (
    ProtocolPublicState,
    ProtocolSecretKey,
    QueryResponse,
    keypair_from_secret,
    server_respond,
)

log = logging.getLogger(__name__)

ERR_UNKNOWN_SESSION = 0x01
ERR_LENGTH_MISMATCH = 0x02
ERR_MALFORMED = 0x03
ERR_CAPACITY = 0x04
ERR_INTERNAL = 0x05

SERVER_MODES = ("honest", "corrupt-first", "partial-sum", "random-b")


class ServiceError(Exception):
    """A wire ERROR message received by the client."""

    def __init__(self, code: int, detail: str = ""):
        super().__init__(f"server error 0x{code:02x}: {detail}")
        self.code = code
        self.detail = detail


@dataclass
class Session:
    bases: BasesVector
    merged: BasesVector
    created_at: float
    query_count: int = 0


class SessionStore:
    """Thread-safe session_id -> session map with a capacity limit."""

    def __init__(self, capacity: int = 128):
        self.capacity = capacity
        self._sessions: dict[bytes, Session] = {}
        self._lock = threading.Lock()

    def put(self, session_id: bytes, session: Session) -> bool:
        with self._lock:
            if session_id not in self._sessions and len(self._sessions) >= self.capacity:
                return False
            self._sessions[session_id] = session
            return True

    def get(self, session_id: bytes) -> Session | None:
        with self._lock:
            return self._sessions.get(session_id)

    def __len__(self):
        with self._lock:
            return len(self._sessions)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: MsmServer = self.server  # type: ignore[assignment]
        while True:
            try:
                msg_type, payload = wire.read_message(self.rfile)
            except EOFError:
                return
            except wire.WireDecodeError as exc:
                self._send_error(ERR_MALFORMED, str(exc))
                continue
            try:
                reply = server.dispatch(msg_type, payload)
            except wire.WireDecodeError as exc:
                self._send_error(ERR_MALFORMED, str(exc))
                continue
            except Exception:
                log.exception("unexpected failure handling message")
                self._send_error(ERR_INTERNAL, "internal error")
                continue
            self.wfile.write(reply)
            self.wfile.flush()

    def _send_error(self, code: int, detail: str):
        try:
            self.wfile.write(
                wire.encode_message(wire.MSG_ERROR, wire.encode_error(code, detail))
            )
            self.wfile.flush()
        except OSError:
            pass


class MsmServer(socketserver.ThreadingTCPServer):
    """Outsourcing server; one thread per connection, shared SessionStore."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        listen_address,
        descriptor: GroupDescriptor,
        store: SessionStore | None = None,
        mode: str = "honest",
        default_bases: BasesVector | None = None,
    ):
        if mode not in SERVER_MODES:
            raise ValueError(f"unknown server mode {mode!r}")
        self.descriptor = descriptor
        self.store = store if store is not None else SessionStore()
        self.mode = mode
        self.default_bases = default_bases
        self._mode_rng = secrets.SystemRandom()
        super().__init__(listen_address, _Handler)

    @property
    def address(self):
        return self.server_address

    def dispatch(self, msg_type: int, payload: bytes) -> bytes:
        if msg_type == wire.MSG_SETUP_UPLOAD:
            return self._handle_setup(payload)
        if msg_type == wire.MSG_QUERY:
            return self._handle_query(payload)
        return self._error(ERR_MALFORMED, f"unexpected message type 0x{msg_type:02x}")

    @staticmethod
    def _error(code: int, detail: str) -> bytes:
        return wire.encode_message(wire.MSG_ERROR, wire.encode_error(code, detail))

    def _handle_setup(self, payload: bytes) -> bytes:
        if len(payload) < wire.SESSION_ID_BYTES:
            raise wire.WireDecodeError("setup payload too short for a session id")
        session_id = payload[: wire.SESSION_ID_BYTES]
        merged, bases = wire.decode_setup(
            payload[wire.SESSION_ID_BYTES :], self.descriptor
        )
        if bases is None:
            bases = self.default_bases
            if bases is None or len(bases) != len(merged):
                return self._error(
                    ERR_MALFORMED, "setup omitted bases and none are preloaded"
                )
        session = Session(bases=bases, merged=merged, created_at=time.time())
        if not self.store.put(session_id, session):
            return self._error(ERR_CAPACITY, "session store is full")
        # Ack with an empty response frame so the client can confirm.
        return wire.encode_message(wire.MSG_RESPONSE, b"")

    def _handle_query(self, payload: bytes) -> bytes:
        session_id, x = wire.decode_query(payload, self.descriptor)
        session = self.store.get(session_id)
        if session is None:
            return self._error(ERR_UNKNOWN_SESSION, "unknown session id")
        if len(x) != len(session.bases):
            return self._error(
                ERR_LENGTH_MISMATCH,
                f"query length {len(x)} does not match session length "
                f"{len(session.bases)}",
            )
        first_query = session.query_count == 0
        session.query_count += 1
        resp = server_respond(session.bases, session.merged, x)
        resp = self._apply_mode(resp, session, x, first_query)
        return wire.encode_message(wire.MSG_RESPONSE, wire.encode_response(resp))

    def _apply_mode(self, resp, session, x, first_query):
        if self.mode == "honest":
            return resp
        if self.mode == "corrupt-first":
            if not first_query:
                return resp
            bad_a = resp.A + self.descriptor.fixed_point
            return QueryResponse(A=bad_a, B=resp.B)
        if self.mode == "partial-sum":
            k = max(1, len(x) // 2)
            part = BasesVector(self.descriptor, session.bases.elements[:k])
            part_t = BasesVector(self.descriptor, session.merged.elements[:k])
            coeffs = CoefficientVector(self.descriptor, x.scalars[:k])
            return QueryResponse(
                A=msm_naive(part, coeffs), B=msm_naive(part_t, coeffs)
            )
        # random-b: correct A, garbage B
        return QueryResponse(
            A=resp.A, B=self.descriptor.random_element(self._mode_rng)
        )


def serve(listen_address, descriptor, store=None, mode="honest", default_bases=None):
    """Run a server until interrupted (CLI entry)."""
    with MsmServer(listen_address, descriptor, store, mode, default_bases) as srv:
        log.info("serving on %s", srv.address)
        srv.serve_forever()


class ServedInBackground:
    """Context manager running an MsmServer on a daemon thread (tests)."""

    def __init__(self, descriptor, store=None, mode="honest", default_bases=None):
        self.server = MsmServer(
            ("127.0.0.1", 0), descriptor, store, mode, default_bases
        )
        self._thread = threading.Thread(
            target=self.server.serve_forever, daemon=True
        )

    def __enter__(self):
        self._thread.start()
        return self.server

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)


class OutsourceClient:
    """Client side of the service: upload a session, query, verify."""

    def __init__(self, address, descriptor: GroupDescriptor, timeout: float = 30.0):
        self.descriptor = descriptor
        self._sock = socket.create_connection(address, timeout=timeout)
        self._rfile = self._sock.makefile("rb")

    def close(self):
        try:
            self._rfile.close()
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _roundtrip(self, message: bytes):
        self._sock.sendall(message)
        msg_type, payload = wire.read_message(self._rfile)
        if msg_type == wire.MSG_ERROR:
            code, detail = wire.decode_error(payload)
            raise ServiceError(code, detail)
        if msg_type != wire.MSG_RESPONSE:
            raise wire.WireDecodeError(
                f"unexpected reply type 0x{msg_type:02x} from server"
            )
        return payload

    def upload_setup(
        self, state: ProtocolPublicState, include_bases: bool = True
    ) -> bytes:
        """Register a new session; returns the fresh session id."""
        session_id = secrets.token_bytes(wire.SESSION_ID_BYTES)
        body = wire.encode_setup(
            state.merged, state.bases if include_bases else None
        )
        payload = session_id + body
        reply = self._roundtrip(wire.encode_message(wire.MSG_SETUP_UPLOAD, payload))
        if reply != b"":
            raise wire.WireDecodeError("setup ack should carry no payload")
        return session_id

    def query_raw(self, session_id: bytes, x: CoefficientVector) -> bytes:
        """Send one query; returns the raw 64-byte response payload."""
        return self._roundtrip(
            wire.encode_message(wire.MSG_QUERY, wire.encode_query(session_id, x))
        )

    def query(self, session_id: bytes, x: CoefficientVector) -> QueryResponse:
        return wire.decode_response(self.query_raw(session_id, x), self.descriptor)


# ---------------------------------------------------------------------------
# Client-side persistence: secret key and bases files.

_KEY_MAGIC = b"VMSMSKv1"

_BACKEND_TAGS = {PRODUCTION: 0, TOY: 1}
_BACKEND_NAMES = {v: k for k, v in _BACKEND_TAGS.items()}


def save_secret_key(path, sk: ProtocolSecretKey):
    """Persist (r, rho) with owner-only permissions.

    Layout: magic || backend (1) || q (32 LE) || n (8 BE) || r (32 LE) ||
    rho (n * 32 LE)."""
    desc = sk.descriptor
    blob = b"".join(
        [
            _KEY_MAGIC,
            bytes([_BACKEND_TAGS[desc.backend_id]]),
            desc.order.to_bytes(32, "little"),
            len(sk.rho).to_bytes(8, "big"),
            sk.r.to_bytes(32, "little"),
            *(s.to_bytes(32, "little") for s in sk.rho),
        ]
    )
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "wb") as fh:
        fh.write(blob)


def load_secret_key(path) -> tuple[GroupDescriptor, int, tuple[int, ...]]:
    """Read a key file back; returns (descriptor, r, rho scalars)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_KEY_MAGIC) + 1 + 32 + 8 + 32 or blob[: len(_KEY_MAGIC)] != _KEY_MAGIC:
        raise ValueError(f"{path} is not a key file")
    off = len(_KEY_MAGIC)
    backend = _BACKEND_NAMES.get(blob[off])
    if backend is None:
        raise ValueError("unknown backend tag in key file")
    off += 1
    q = int.from_bytes(blob[off : off + 32], "little")
    off += 32
    n = int.from_bytes(blob[off : off + 8], "big")
    off += 8
    if len(blob) != off + 32 * (n + 1):
        raise ValueError("key file truncated")
    r = int.from_bytes(blob[off : off + 32], "little")
    off += 32
    rho = tuple(
        int.from_bytes(blob[off + 32 * i : off + 32 * (i + 1)], "little")
        for i in range(n)
    )
    desc = make_group(backend, None if backend == PRODUCTION else q)
    if desc.order != q:
        raise ValueError("key file order does not match the backend")
    if r >= q or any(s >= q for s in rho):
        raise ValueError("key file scalars are not reduced")
    return desc, r, rho


def save_bases(path, bases: BasesVector):
    """Bases file: n (8 bytes big-endian) || n 32-byte point cells."""
    desc = bases.descriptor
    with open(path, "wb") as fh:
        fh.write(len(bases).to_bytes(8, "big"))
        for e in bases:
            fh.write(desc.element_to_cell(e))


def load_bases(path, descriptor) -> BasesVector:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise ValueError("bases file truncated")
    n = int.from_bytes(blob[:8], "big")
    if len(blob) != 8 + 32 * n:
        raise ValueError("bases file length does not match its header")
    return BasesVector(
        descriptor,
        [
            descriptor.element_from_cell(blob[8 + 32 * i : 8 + 32 * (i + 1)])
            for i in range(n)
        ],
    )


def rebuild_keypair(descriptor, r, rho, bases):
    """Key file + bases file -> usable (sk, state) pair."""
    return keypair_from_secret(r, rho, bases, descriptor)
