"""Verifiable outsourcing of multi-scalar multiplication.

A client with fixed bases P runs a one-time keyed setup, uploads a
merged-bases vector to an untrusted server, and can then outsource each
MSM(P, x): the server returns two group elements per query and the
client verifies the claimed result with one field inner product plus a
constant number of group operations.  Acceptance of a wrong result is
statistically bounded by 1/q per query against arbitrary servers.
"""

from .groups import (
    GroupDescriptor,
    PRODUCTION,
    RistrettoGroup,
    TOY,
    ToyGroup,
    fixed_base_mul_q,
    group_add,
    make_group,
    sample_scalar,
    scalar_mul,
)
from .innerprod import inner_product_lazy, inner_product_naive
from .msm import (
    BasesVector,
    CoefficientVector,
    msm_bucketed,
    msm_dual,
    msm_naive,
    random_bases,
    random_coeffs,
)
from .protocol import (
    ProtocolPublicState,
    ProtocolSecretKey,
    QueryResponse,
    VerdictRecord,
    client_verify,
    keypair_from_secret,
    server_respond,
    setup,
    verify_equation_only,
)

__version__ = "0.1.0"

__all__ = [
    "BasesVector",
    "CoefficientVector",
    "GroupDescriptor",
    "PRODUCTION",
    "ProtocolPublicState",
    "ProtocolSecretKey",
    "QueryResponse",
    "RistrettoGroup",
    "TOY",
    "ToyGroup",
    "VerdictRecord",
    "client_verify",
    "fixed_base_mul_q",
    "group_add",
    "inner_product_lazy",
    "inner_product_naive",
    "keypair_from_secret",
    "make_group",
    "msm_bucketed",
    "msm_dual",
    "msm_naive",
    "random_bases",
    "random_coeffs",
    "sample_scalar",
    "scalar_mul",
    "server_respond",
    "setup",
    "verify_equation_only",
]
