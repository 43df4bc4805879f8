"""Core of the verifiable MSM outsourcing protocol.

A one-time keyed setup over fixed bases P samples a secret scalar r and a
secret coefficient vector rho, and publishes the merged-bases vector
T_i = r*P_i + rho_i*Q.  Per query the server returns two group elements,
the claimed result A = MSM(P, x) and the check value B = MSM(T, x); the
client accepts A iff B = r*A + <x, rho>*Q.  Verification therefore costs
one length-n field inner product plus two scalar multiplications, one
addition and one equality test in the group, independent of n.

Soundness is statistical: an adversarial server, however powerful, makes
the verifier accept an incorrect A with probability at most 1/q per
query, because acceptance of a wrong A pins down the uniformly hidden r
to a single candidate value.

The secret key is never given a wire encoding; see vmsm.wire.
"""

from __future__ import annotations

import threading
import time
import warnings
from dataclasses import dataclass, field

from .groups import GroupDescriptor, fixed_base_mul_q, group_add, scalar_mul
from .innerprod import inner_product_lazy
from .msm import BasesVector, CoefficientVector, msm_dual

# Advisory number of verifications per key before a rotation warning; at
# this count the cumulative cheat probability e/q is still below 2^-230
# on the production backend.
DEFAULT_USAGE_LIMIT = 1 << 20


@dataclass
class ProtocolSecretKey:
    """Client secret state: the scalar r and the trap coefficients rho.

    Holds an advisory usage counter; exceeding `usage_limit` emits a
    UserWarning on each further verification but never blocks.
    """

    r: int
    rho: CoefficientVector
    descriptor: GroupDescriptor
    usage_limit: int = DEFAULT_USAGE_LIMIT
    _uses: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def uses(self) -> int:
        return self._uses

    def _count_use(self):
        with self._lock:
            self._uses += 1
            over = self._uses > self.usage_limit
        if over:
            warnings.warn(
                f"secret key used {self._uses} times, past the advisory "
                f"limit of {self.usage_limit}; consider re-running setup",
                UserWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class ProtocolPublicState:
    """Server-facing state: the bases P and the merged bases T."""

    bases: BasesVector
    merged: BasesVector
    descriptor: GroupDescriptor


@dataclass(frozen=True)
class QueryResponse:
    """The server's answer to one query: exactly two group elements."""

    A: object
    B: object

    def __post_init__(self):
        if self.A.backend_id != self.B.backend_id:
            raise TypeError("response elements from different backends")


@dataclass(frozen=True)
class VerdictRecord:
    """Verifier outcome plus timing metadata for benchmarking."""

    accepted: bool
    output: object | None
    elapsed_seconds: float


def keypair_from_secret(
    r: int,
    rho,
    bases: BasesVector,
    descriptor: GroupDescriptor,
    usage_limit: int = DEFAULT_USAGE_LIMIT,
):
    """Rebuild the key pair from explicit secret material.

    Used for loading persisted keys and for tests that pin r and rho; the
    merged vector is recomputed from scratch, so the public state always
    matches the secret."""
    if descriptor.fixed_point.is_identity():
        raise ValueError("the fixed point Q must not be the identity")
    if not isinstance(rho, CoefficientVector):
        rho = CoefficientVector(descriptor, rho)
    if len(rho) != len(bases):
        raise ValueError("rho length must equal the number of bases")
    merged = BasesVector(
        descriptor,
        [
            group_add(scalar_mul(r, p), fixed_base_mul_q(descriptor, rho_i))
            for p, rho_i in zip(bases, rho)
        ],
    )
    sk = ProtocolSecretKey(r % descriptor.order, rho, descriptor, usage_limit)
    state = ProtocolPublicState(bases, merged, descriptor)
    return sk, state


def setup(bases: BasesVector, descriptor: GroupDescriptor, rng=None):
    """One-time keyed setup: sample (r, rho) and derive the merged bases.

    r is sampled uniformly from the full scalar field, including zero;
    the soundness argument needs every residue equally likely."""
    r = descriptor.sample_scalar(rng)
    rho = CoefficientVector(
        descriptor, [descriptor.sample_scalar(rng) for _ in range(len(bases))]
    )
    return keypair_from_secret(r, rho, bases, descriptor)


def server_respond(
    state_p: BasesVector, state_t: BasesVector, x: CoefficientVector
) -> QueryResponse:
    """Honest server computation: both MSMs through the dual engine."""
    a, b = msm_dual(state_p, state_t, x)
    return QueryResponse(A=a, B=b)


def client_verify(
    sk: ProtocolSecretKey,
    descriptor: GroupDescriptor,
    x: CoefficientVector,
    resp: QueryResponse,
) -> VerdictRecord:
    """Accept and output A iff B = r*A + <x, rho>*Q.

    A length mismatch between x and the key is a usage error and raises;
    a reject verdict is reserved for well-formed but wrong responses."""
    if len(x) != len(sk.rho):
        raise ValueError(
            f"query length {len(x)} does not match key length {len(sk.rho)}"
        )
    t0 = time.perf_counter()
    s = inner_product_lazy(x, sk.rho)
    expected = group_add(scalar_mul(sk.r, resp.A), fixed_base_mul_q(descriptor, s))
    accepted = expected == resp.B
    elapsed = time.perf_counter() - t0
    sk._count_use()
    return VerdictRecord(accepted, resp.A if accepted else None, elapsed)


def verify_equation_only(r: int, s: int, q_point, resp: QueryResponse) -> bool:
    """The bare acceptance predicate B == r*A + s*Q for explicit r, s, Q.

    Factored out so the adversary experiments can sweep candidate r
    values without re-deriving s from a key."""
    return group_add(scalar_mul(r, resp.A), scalar_mul(s, q_point)) == resp.B
