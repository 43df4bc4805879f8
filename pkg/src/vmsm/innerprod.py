"""Scalar-field inner products, the dominant verifier cost.

The lazy variant accumulates full-width products in a wide accumulator
and reduces modulo q once per block instead of once per term.  With the
default block size of 128 the accumulator peaks below
q + 128 * (q-1)^2 < 2^512 for the production field; the bound is checked
at import time for the production order and per call for any other
modulus.
"""

from operator import mul

from . import _ed25519

DEFAULT_BLOCK_SIZE = 128


def max_block_size(q: int) -> int:
    """Largest block size for which the accumulator stays below 2^512."""
    return (1 << 512) // ((q - 1) ** 2) if q > 2 else 1 << 500


class WideAccumulator:
    """Unreduced sum of scalar products, bounded below 2^512.

    Tracks how many terms entered since the last reduction; callers must
    reduce at least once per block_size terms, which `add_block` enforces.
    """

    __slots__ = ("value", "terms_since_reduction", "_q", "_block_size")

    def __init__(self, q: int, block_size: int = DEFAULT_BLOCK_SIZE):
        if block_size < 1:
            raise ValueError("block size must be positive")
        if block_size > max_block_size(q):
            raise ValueError(
                f"block size {block_size} can overflow 512 bits for q={q}"
            )
        self.value = 0
        self.terms_since_reduction = 0
        self._q = q
        self._block_size = block_size

    def add_product(self, a: int, b: int):
        if self.terms_since_reduction >= self._block_size:
            raise OverflowError("reduce() required before adding more terms")
        self.value += a * b
        self.terms_since_reduction += 1

    def add_block(self, xs, rhos):
        """Accumulate a whole block of products in one shot."""
        if len(xs) > self._block_size - self.terms_since_reduction:
            raise OverflowError("block exceeds the accumulator's safe capacity")
        self.value += sum(map(mul, xs, rhos))
        self.terms_since_reduction += len(xs)

    def reduce(self):
        self.value %= self._q
        self.terms_since_reduction = 0


def _check(x, rho):
    if len(x) != len(rho):
        raise ValueError(f"length mismatch: {len(x)} vs {len(rho)}")
    if x.descriptor.order != rho.descriptor.order:
        raise ValueError("inner product operands use different scalar fields")


def inner_product_naive(x, rho) -> int:
    """sum(x_i * rho_i) mod q, reducing after every multiply-add."""
    _check(x, rho)
    q = x.descriptor.order
    acc = 0
    for a, b in zip(x.scalars, rho.scalars):
        acc = (acc + a * b) % q
    return acc


def inner_product_lazy(x, rho, block_size: int = DEFAULT_BLOCK_SIZE) -> int:
    """sum(x_i * rho_i) mod q with one reduction per block of terms."""
    _check(x, rho)
    xs = x.scalars
    rs = rho.scalars
    acc = WideAccumulator(x.descriptor.order, block_size)
    for i in range(0, len(xs), block_size):
        acc.add_block(xs[i : i + block_size], rs[i : i + block_size])
        acc.reduce()
    return acc.value


# Accumulator safety for the production field at the default block size:
# a reduced carry-in (< q) plus 128 full-width products must fit in 512
# bits.  (q is a hair above 2^252, so 128*(q-1)^2 lands just above 2^511
# but still far below 2^512.)
assert (_ed25519.ORDER - 1) + DEFAULT_BLOCK_SIZE * (_ed25519.ORDER - 1) ** 2 < 1 << 512
assert DEFAULT_BLOCK_SIZE <= max_block_size(_ed25519.ORDER)
