"""Multi-scalar multiplication engines.

Two engines compute sum(x_i * P_i): a naive accumulate loop (n scalar
multiplications, n-1 additions) and a windowed bucket engine that shares
doublings across all terms.  `msm_dual` evaluates the same coefficient
vector against two base vectors while extracting each scalar's window
digits only once.

The bucket engine works on the backend's raw point representation
(extended coordinates for ristretto255, plain residues for the toy
group); both engines are pure functions of their inputs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .groups import GroupDescriptor


class BasesVector:
    """An ordered, non-empty sequence of group elements under one backend."""

    __slots__ = ("descriptor", "elements")

    def __init__(self, descriptor: GroupDescriptor, elements):
        elements = tuple(elements)
        if not elements:
            raise ValueError("bases vector must contain at least one element")
        for e in elements:
            if e.backend_id != descriptor.backend_id:
                raise TypeError("bases element from a different backend")
        self.descriptor = descriptor
        self.elements = elements

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def __iter__(self):
        return iter(self.elements)


class CoefficientVector:
    """Scalars applied to a bases vector; stored fully reduced."""

    __slots__ = ("descriptor", "scalars")

    def __init__(self, descriptor: GroupDescriptor, scalars):
        scalars = tuple(scalars)
        if not scalars:
            raise ValueError("coefficient vector must contain at least one scalar")
        q = descriptor.order
        for s in scalars:
            if not isinstance(s, int) or not 0 <= s < q:
                raise ValueError("coefficients must be reduced residues in [0, q)")
        self.descriptor = descriptor
        self.scalars = scalars

    def __len__(self):
        return len(self.scalars)

    def __getitem__(self, i):
        return self.scalars[i]

    def __iter__(self):
        return iter(self.scalars)


def random_bases(descriptor, n, rng=None) -> BasesVector:
    return BasesVector(descriptor, [descriptor.random_element(rng) for _ in range(n)])


def random_coeffs(descriptor, n, rng=None) -> CoefficientVector:
    return CoefficientVector(
        descriptor, [descriptor.sample_scalar(rng) for _ in range(n)]
    )


def _check_lengths(bases, coeffs):
    if len(bases) != len(coeffs):
        raise ValueError(
            f"length mismatch: {len(bases)} bases vs {len(coeffs)} coefficients"
        )


def msm_naive(bases: BasesVector, coeffs: CoefficientVector, threads: int = 1):
    """sum(x_i * P_i) as n scalar multiplications plus n-1 additions.

    With threads > 1 the terms are chunked across a thread pool and the
    partial sums combined in chunk order, which keeps the result identical
    to the sequential computation.
    """
    _check_lengths(bases, coeffs)
    if threads > 1 and len(bases) >= 2 * threads:
        chunk = (len(bases) + threads - 1) // threads
        spans = [
            (bases.elements[i : i + chunk], coeffs.scalars[i : i + chunk])
            for i in range(0, len(bases), chunk)
        ]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda sp: _naive_span(*sp), spans))
        acc = parts[0]
        for part in parts[1:]:
            acc = acc + part
        return acc
    return _naive_span(bases.elements, coeffs.scalars)


def _naive_span(elements, scalars):
    acc = scalars[0] * elements[0]
    for e, k in zip(elements[1:], scalars[1:]):
        acc = acc + k * e
    return acc


def window_width(n: int, scalar_bits: int) -> int:
    """Bucket window width minimizing the modeled group-operation count.

    Cost per window is roughly n bucket insertions plus two additions per
    occupied bucket slot plus a small per-slot scan cost; the number of
    windows is ceil(scalar_bits / w).
    """
    best_w, best_cost = 1, None
    for w in range(1, 17):
        windows = -(-scalar_bits // w)
        cost = windows * (n + 2 * min(n, (1 << w) - 1) + (1 << w) * 0.05)
        if best_cost is None or cost < best_cost:
            best_w, best_cost = w, cost
    return best_w


def _bucket_pass(raws, digits, nbuckets, add):
    """One window: accumulate raws into buckets by digit, then fold the
    buckets with the running-sum trick so bucket b contributes b times."""
    buckets = [None] * nbuckets
    for raw, d in zip(raws, digits):
        if d:
            cur = buckets[d]
            buckets[d] = raw if cur is None else add(cur, raw)
    running = None
    total = None
    for b in range(nbuckets - 1, 0, -1):
        cur = buckets[b]
        if cur is not None:
            running = cur if running is None else add(running, cur)
        if running is not None:
            total = running if total is None else add(total, running)
    return total


def _bucketed_raw(descriptor, raw_vectors, scalars):
    """Shared bucket-method core: one digit decomposition, one bucket pass
    per (window, base vector).  Returns one raw accumulator per vector."""
    n = len(scalars)
    w = window_width(n, descriptor.order.bit_length())
    nwin = -(-descriptor.order.bit_length() // w)
    mask = (1 << w) - 1
    add = descriptor.raw_add
    double = descriptor.raw_double
    accs = [None] * len(raw_vectors)
    for j in range(nwin - 1, -1, -1):
        shift = j * w
        digits = [(k >> shift) & mask for k in scalars]
        for v, raws in enumerate(raw_vectors):
            acc = accs[v]
            if acc is not None:
                for _ in range(w):
                    acc = double(acc)
            ws = _bucket_pass(raws, digits, mask + 1, add)
            if ws is not None:
                acc = ws if acc is None else add(acc, ws)
            accs[v] = acc
    identity = descriptor.raw_identity
    return [identity if a is None else a for a in accs]


def msm_bucketed(bases: BasesVector, coeffs: CoefficientVector):
    """Windowed bucket MSM; mathematically identical to msm_naive."""
    _check_lengths(bases, coeffs)
    desc = bases.descriptor
    raws = [desc.raw_of(e) for e in bases]
    (acc,) = _bucketed_raw(desc, [raws], coeffs.scalars)
    return desc.element_from_raw(acc)


def msm_dual(bases1: BasesVector, bases2: BasesVector, coeffs: CoefficientVector):
    """(MSM(bases1, x), MSM(bases2, x)) with the scalar digit decomposition
    shared across both evaluations."""
    _check_lengths(bases1, coeffs)
    _check_lengths(bases2, coeffs)
    desc = bases1.descriptor
    if bases2.descriptor.backend_id != desc.backend_id:
        raise TypeError("dual MSM requires both base vectors on one backend")
    raws1 = [desc.raw_of(e) for e in bases1]
    raws2 = [desc.raw_of(e) for e in bases2]
    acc1, acc2 = _bucketed_raw(desc, [raws1, raws2], coeffs.scalars)
    return desc.element_from_raw(acc1), desc.element_from_raw(acc2)
