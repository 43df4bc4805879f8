"""Prime-order group abstraction with two interchangeable backends.

The production backend is ristretto255 (order roughly 2^252), the group
used for real outsourcing.  The toy backend is the additive group of
integers modulo a small prime, which makes acceptance probabilities such
as 1/q large enough to measure empirically and small enough state spaces
to enumerate exhaustively.  Soundness of the outsourcing check is
statistical rather than discrete-log based, so the toy group is a
faithful testbed despite its trivially solvable discrete log.

Scalars are plain Python integers, always fully reduced into [0, q).
Group elements are immutable value objects; everything here is safe to
share across threads.
"""

from __future__ import annotations

import secrets

from gmpy2 import mpz

from . import _ed25519, _sodium

PRODUCTION = "production"
TOY = "toy"

_SYSTEM_RNG = secrets.SystemRandom()

_IDENTITY_ENC = bytes(32)


def _is_prime(n: int) -> bool:
    # Deterministic Miller-Rabin, exact for n < 3.3e24; toy moduli are
    # machine words so this is more than enough.
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class RistrettoElement:
    """A ristretto255 group element.

    Internally keeps whichever representations have been materialized: the
    canonical 32-byte encoding and/or extended Edwards coordinates.  Each
    is derived lazily from the other, so hot paths never pay for a form
    they do not touch.
    """

    __slots__ = ("_enc", "_ext")
    backend_id = PRODUCTION

    def __init__(self, enc=None, ext=None):
        if enc is None and ext is None:
            raise ValueError("element needs at least one representation")
        self._enc = enc
        self._ext = ext

    def ext(self):
        if self._ext is None:
            self._ext = _ed25519.decode(self._enc)
            if self._ext is None:
                raise ValueError("non-canonical ristretto255 encoding")
        return self._ext

    def to_bytes(self) -> bytes:
        if self._enc is None:
            self._enc = _ed25519.encode(self._ext)
        return self._enc

    def to_cell(self) -> bytes:
        """Fixed 32-byte wire cell; identical to the canonical encoding."""
        return self.to_bytes()

    def is_identity(self) -> bool:
        if self._enc is not None:
            return self._enc == _IDENTITY_ENC
        x, y, _, _ = self._ext
        return x == 0 or y == 0

    def __add__(self, other):
        if not isinstance(other, RistrettoElement):
            raise TypeError("cannot add elements from different backends")
        if self._ext is not None and other._ext is not None:
            return RistrettoElement(ext=_ed25519.point_add(self._ext, other._ext))
        if _sodium.available and self._enc is not None and other._enc is not None:
            return RistrettoElement(enc=_sodium.add(self._enc, other._enc))
        return RistrettoElement(ext=_ed25519.point_add(self.ext(), other.ext()))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        if self._ext is not None or not _sodium.available:
            return RistrettoElement(ext=_ed25519.point_neg(self.ext()))
        return RistrettoElement(enc=_sodium.sub(_IDENTITY_ENC, self._enc))

    def __rmul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        k %= _ed25519.ORDER
        if k == 0:
            return _RISTRETTO_IDENTITY
        if k == 1:
            return self
        if _sodium.available:
            return RistrettoElement(enc=_sodium.scalar_mult(k, self.to_bytes()))
        return RistrettoElement(ext=_ed25519.scalar_mult(k, self.ext()))

    def __eq__(self, other):
        if not isinstance(other, RistrettoElement):
            return NotImplemented
        if self._enc is not None and other._enc is not None:
            return self._enc == other._enc
        return _ed25519.point_eq(self.ext(), other.ext())

    def __hash__(self):
        return hash(self.to_bytes())

    def __repr__(self):
        return f"RistrettoElement({self.to_bytes().hex()})"


_RISTRETTO_IDENTITY = RistrettoElement(enc=_IDENTITY_ENC, ext=_ed25519.IDENTITY)


class ToyElement:
    """An element of the additive group Z_q for a small prime q."""

    __slots__ = ("value", "order")
    backend_id = TOY

    def __init__(self, value: int, order: int):
        self.value = value % order
        self.order = order

    def to_bytes(self) -> bytes:
        # Minimal big-endian; zero is a single zero byte.
        return self.value.to_bytes(max(1, (self.value.bit_length() + 7) // 8), "big")

    def to_cell(self) -> bytes:
        """Fixed 32-byte wire cell: the residue, big-endian, zero-padded."""
        return self.value.to_bytes(32, "big")

    def is_identity(self) -> bool:
        return self.value == 0

    def _check(self, other):
        if not isinstance(other, ToyElement):
            raise TypeError("cannot add elements from different backends")
        if other.order != self.order:
            raise TypeError("toy elements from groups of different order")

    def __add__(self, other):
        self._check(other)
        return ToyElement(self.value + other.value, self.order)

    def __sub__(self, other):
        self._check(other)
        return ToyElement(self.value - other.value, self.order)

    def __neg__(self):
        return ToyElement(-self.value, self.order)

    def __rmul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return ToyElement(k * self.value, self.order)

    def __eq__(self, other):
        if not isinstance(other, ToyElement):
            return NotImplemented
        return self.order == other.order and self.value == other.value

    def __hash__(self):
        return hash((self.order, self.value))

    def __repr__(self):
        return f"ToyElement({self.value} mod {self.order})"


class GroupDescriptor:
    """Shared interface of the two group backends.

    Exposes the public fixed point Q, scalar sampling, canonical
    encodings, and a raw-representation layer (`raw_*`) used by the MSM
    engines to avoid per-operation wrapper objects.
    """

    backend_id: str
    order: int
    fixed_point: object

    def sample_scalar(self, rng=None) -> int:
        """Uniform scalar in [0, order); rng defaults to the system CSPRNG."""
        return (rng or _SYSTEM_RNG).randrange(self.order)

    def scalar_to_bytes32(self, k: int) -> bytes:
        if not 0 <= k < self.order:
            raise ValueError("scalar out of range")
        return k.to_bytes(32, "little")

    def scalar_from_bytes32(self, data: bytes) -> int:
        if len(data) != 32:
            raise ValueError("scalar encoding must be 32 bytes")
        k = int.from_bytes(data, "little")
        if k >= self.order:
            raise ValueError("scalar encoding not fully reduced")
        return k

    # Element <-> fixed 32-byte cells, used by the wire format and files.
    def element_to_cell(self, e) -> bytes:
        raise NotImplementedError

    def element_from_cell(self, data: bytes):
        raise NotImplementedError


class RistrettoGroup(GroupDescriptor):
    backend_id = PRODUCTION
    order = _ed25519.ORDER

    def __init__(self):
        self.fixed_point = RistrettoElement(
            enc=_ed25519.BASEPOINT_ENC, ext=_ed25519.BASEPOINT
        )
        self.identity = RistrettoElement(enc=_IDENTITY_ENC, ext=_ed25519.IDENTITY)
        self.raw_add = _ed25519.point_add
        self.raw_double = _ed25519.point_double
        self.raw_identity = _ed25519.IDENTITY

    def fixed_base_mul(self, k: int):
        """k*Q with Q the standard basepoint; uses libsodium's precomputed
        basepoint table when the library is present."""
        if _sodium.available:
            return RistrettoElement(enc=_sodium.scalar_mult_base(k))
        return RistrettoElement(ext=_ed25519.scalar_mult(k, _ed25519.BASEPOINT))

    def random_element(self, rng=None):
        # k*Q for uniform k is uniform over the whole group.
        return self.fixed_base_mul(self.sample_scalar(rng))

    def element_to_cell(self, e) -> bytes:
        return e.to_cell()

    def element_from_cell(self, data: bytes):
        if len(data) != 32:
            raise ValueError("ristretto element cell must be 32 bytes")
        e = RistrettoElement(enc=bytes(data))
        e.ext()  # force validation, rejects non-canonical encodings
        return e

    def raw_of(self, e):
        return e.ext()

    def element_from_raw(self, raw):
        return RistrettoElement(ext=raw)

    def __repr__(self):
        return "RistrettoGroup()"


class ToyGroup(GroupDescriptor):
    backend_id = TOY

    def __init__(self, order: int = 251):
        if not _is_prime(order):
            raise ValueError(f"toy group order must be prime, got {order}")
        self.order = order
        self.fixed_point = ToyElement(1, order)
        self.identity = ToyElement(0, order)
        self.raw_add = lambda a, b, q=order: (a + b) % q
        self.raw_double = lambda a, q=order: (a + a) % q
        self.raw_identity = 0

    def fixed_base_mul(self, k: int):
        return ToyElement(k, self.order)

    def random_element(self, rng=None):
        return ToyElement(self.sample_scalar(rng), self.order)

    def element_to_cell(self, e) -> bytes:
        return e.to_cell()

    def element_from_cell(self, data: bytes):
        if len(data) != 32:
            raise ValueError("toy element cell must be 32 bytes")
        v = int.from_bytes(data, "big")
        if v >= self.order:
            raise ValueError("toy element not reduced modulo the group order")
        return ToyElement(v, self.order)

    def raw_of(self, e):
        if e.order != self.order:
            raise TypeError("toy element from a group of different order")
        return e.value

    def element_from_raw(self, raw):
        return ToyElement(raw, self.order)

    def __repr__(self):
        return f"ToyGroup(order={self.order})"


def group_add(a, b):
    """a + b; the operands must come from the same backend."""
    return a + b


def scalar_mul(k: int, p):
    """k*P by generic double-and-add (or libsodium when available)."""
    return k * p


def fixed_base_mul_q(descriptor: GroupDescriptor, k: int):
    """k*Q for the descriptor's fixed public point Q."""
    return descriptor.fixed_base_mul(k)


def sample_scalar(descriptor: GroupDescriptor, rng=None) -> int:
    return descriptor.sample_scalar(rng)


def make_group(backend: str, order: int | None = None) -> GroupDescriptor:
    """Build a descriptor from CLI-style parameters."""
    if backend == PRODUCTION:
        if order is not None:
            raise ValueError("the production group has a fixed order")
        return RistrettoGroup()
    if backend == TOY:
        return ToyGroup(order if order is not None else 251)
    raise ValueError(f"unknown backend {backend!r}")
