"""Optional libsodium acceleration for ristretto255.

If a libsodium shared library is present it is loaded via ctypes and used
for single scalar multiplications, fixed-base multiplications and
compressed-point additions, all of which libsodium performs far faster
than the pure-Python path.  When the library is absent every entry point
in vmsm falls back to the Python implementation in _ed25519; nothing else
changes.  The two paths are cross-checked against each other in the test
suite.

All functions here take and return canonical 32-byte encodings.
"""

import ctypes
import ctypes.util

from . import _ed25519

_IDENTITY_ENC = bytes(32)

_lib = None
try:
    _path = ctypes.util.find_library("sodium") or ctypes.util.find_library("libsodium")
    if _path is not None:
        _lib = ctypes.cdll.LoadLibrary(_path)
        if _lib.sodium_init() < 0:  # pragma: no cover
            _lib = None
except OSError:  # pragma: no cover
    _lib = None

available = _lib is not None


def _call2(fn, a, b):
    out = ctypes.create_string_buffer(32)
    if fn(out, a, b) != 0:
        raise ValueError("libsodium rejected a group operation input")
    return out.raw


def add(p, q):
    if p == _IDENTITY_ENC:
        return q
    if q == _IDENTITY_ENC:
        return p
    return _call2(_lib.crypto_core_ristretto255_add, p, q)


def sub(p, q):
    if q == _IDENTITY_ENC:
        return p
    return _call2(_lib.crypto_core_ristretto255_sub, p, q)


def scalar_mult(k, p):
    """k*P for an integer k (any residue) and encoded point P.

    libsodium rejects zero scalars and identity results, so the cases a
    prime-order group makes exact (k = 0 mod q, or P the identity) are
    short-circuited here.
    """
    k %= _ed25519.ORDER
    if k == 0 or p == _IDENTITY_ENC:
        return _IDENTITY_ENC
    return _call2(
        _lib.crypto_scalarmult_ristretto255, k.to_bytes(32, "little"), p
    )


def scalar_mult_base(k):
    k %= _ed25519.ORDER
    if k == 0:
        return _IDENTITY_ENC
    out = ctypes.create_string_buffer(32)
    if _lib.crypto_scalarmult_ristretto255_base(out, k.to_bytes(32, "little")) != 0:
        raise ValueError("libsodium rejected a base multiplication")
    return out.raw


def is_valid(p):
    return len(p) == 32 and _lib.crypto_core_ristretto255_is_valid_point(p) == 1
