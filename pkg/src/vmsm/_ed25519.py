"""Field and point arithmetic for the ristretto255 group.

Points are twisted Edwards curve points (a = -1) over GF(2^255 - 19) in
extended coordinates (X, Y, Z, T) with x = X/Z, y = Y/Z, x*y = T/Z, held
as gmpy2 mpz values for speed.  The canonical wire form of a group element
is the 32-byte ristretto encoding, which quotients out the cofactor; all
encode/decode/equality logic below operates on that quotient.

Internal module: consumers go through vmsm.groups.
"""

from gmpy2 import mpz, powmod

P = mpz(2**255 - 19)

# Edwards constant d = -121665/121666, plus derived constants used by the
# ristretto encode/decode maps.
D = mpz(-121665) * powmod(mpz(121666), P - 2, P) % P
SQRT_M1 = powmod(mpz(2), (P - 1) // 4, P)

# Group order (prime): 2^252 + 27742317777372353535851937790883648493.
ORDER = 2**252 + 27742317777372353535851937790883648493

_ZERO = mpz(0)
_ONE = mpz(1)

IDENTITY = (_ZERO, _ONE, _ONE, _ZERO)

# Standard basepoint: y = 4/5, x the even root.
_BY = mpz(4) * powmod(mpz(5), P - 2, P) % P
_BX = mpz(15112221349535400772501151409588531511454012693041857206046113283949847762202)
BASEPOINT = (_BX, _BY, _ONE, _BX * _BY % P)

BASEPOINT_ENC = bytes.fromhex(
    "e2f2ae0a6abc4e71a884a961c500515f58e30b6aa582dd8db6a65945e08d2d76"
)


def _is_negative(e):
    return bool(e & 1)


def sqrt_ratio_m1(u, v):
    """Return (was_square, r) with r = sqrt(u/v) if u/v is square, else
    sqrt(SQRT_M1*u/v); r is always the non-negative (even) root."""
    v3 = v * v % P * v % P
    v7 = v3 * v3 % P * v % P
    r = u * v3 % P * powmod(u * v7 % P, (P - 5) // 8, P) % P
    check = v * r % P * r % P
    u_neg = P - u if u else _ZERO
    correct = check == u % P
    flipped = check == u_neg
    flipped_i = check == u_neg * SQRT_M1 % P
    if flipped or flipped_i:
        r = r * SQRT_M1 % P
    if _is_negative(r):
        r = P - r
    return (correct or flipped), r


_INVSQRT_A_MINUS_D = sqrt_ratio_m1(_ONE, (P - 1 - D) % P)[1]


def point_add(p, q):
    X1, Y1, Z1, T1 = p
    X2, Y2, Z2, T2 = q
    A = (Y1 - X1) * (Y2 - X2) % P
    B = (Y1 + X1) * (Y2 + X2) % P
    C = 2 * D * T1 % P * T2 % P
    Dv = 2 * Z1 * Z2 % P
    E = B - A
    F = Dv - C
    G = Dv + C
    H = B + A
    return E * F % P, G * H % P, F * G % P, E * H % P


def point_double(p):
    X1, Y1, Z1, _ = p
    A = X1 * X1 % P
    B = Y1 * Y1 % P
    C = 2 * Z1 * Z1 % P
    H = A + B
    E = H - (X1 + Y1) * (X1 + Y1) % P
    G = A - B
    F = C + G
    return E * F % P, G * H % P, F * G % P, E * H % P


def point_neg(p):
    X, Y, Z, T = p
    return (P - X if X else X), Y, Z, (P - T if T else T)


def point_eq(p, q):
    """Ristretto equality: compares points modulo the 4-torsion coset."""
    X1, Y1, _, _ = p
    X2, Y2, _, _ = q
    if (X1 * Y2 - Y1 * X2) % P == 0:
        return True
    return (Y1 * Y2 - X1 * X2) % P == 0


def scalar_mult(k, p):
    """Variable-time scalar multiplication via 4-bit fixed windows."""
    k %= ORDER
    if k == 0:
        return IDENTITY
    # table[i] = i*p for i in 1..15
    table = [None, p]
    for i in range(2, 16):
        table.append(point_add(table[i - 1], p))
    acc = None
    for shift in range((k.bit_length() + 3) // 4 * 4 - 4, -1, -4):
        if acc is not None:
            acc = point_double(point_double(point_double(point_double(acc))))
        digit = (k >> shift) & 15
        if digit:
            acc = table[digit] if acc is None else point_add(acc, table[digit])
    return acc if acc is not None else IDENTITY


def encode(p):
    """Canonical 32-byte ristretto encoding."""
    X, Y, Z, T = p
    u1 = (Z + Y) * (Z - Y) % P
    u2 = X * Y % P
    _, invsqrt = sqrt_ratio_m1(_ONE, u1 * u2 % P * u2 % P)
    den1 = invsqrt * u1 % P
    den2 = invsqrt * u2 % P
    z_inv = den1 * den2 % P * T % P
    if _is_negative(T * z_inv % P):
        x = Y * SQRT_M1 % P
        y = X * SQRT_M1 % P
        den_inv = den1 * _INVSQRT_A_MINUS_D % P
    else:
        x = X
        y = Y
        den_inv = den2
    if _is_negative(x * z_inv % P):
        y = P - y if y else y
    s = (Z - y) * den_inv % P
    if _is_negative(s):
        s = P - s
    return int(s).to_bytes(32, "little")


def decode(data):
    """Decode a canonical 32-byte ristretto string, or return None."""
    if len(data) != 32:
        return None
    s = mpz(int.from_bytes(data, "little"))
    if s >= P or _is_negative(s):
        return None
    ss = s * s % P
    u1 = (1 - ss) % P
    u2 = (1 + ss) % P
    u2_sqr = u2 * u2 % P
    v = (P - D * u1 % P * u1 % P - u2_sqr) % P
    ok, invsqrt = sqrt_ratio_m1(_ONE, v * u2_sqr % P)
    den_x = invsqrt * u2 % P
    den_y = invsqrt * den_x % P * v % P
    x = 2 * s % P * den_x % P
    if _is_negative(x):
        x = P - x
    y = u1 * den_y % P
    t = x * y % P
    if not ok or _is_negative(t) or y == 0:
        return None
    return x, y, _ONE, t


# Startup self-check: the derived constants must reproduce the published
# basepoint encoding, otherwise every higher layer is wrong.
if encode(BASEPOINT) != BASEPOINT_ENC:  # pragma: no cover
    raise AssertionError("ristretto255 constants failed self-check")
