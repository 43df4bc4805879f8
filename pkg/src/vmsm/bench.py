"""Benchmark harness: verification time against local MSM baselines.

For each dimension n = 2^e the harness samples fresh bases and
coefficients, runs the keyed setup once, then times three things per
iteration: the bucketed MSM, the naive MSM, and the client-side
verification of a precomputed honest response.  Verification timing
includes decoding the 64-byte response payload, since a real client
always pays for that.

Speedups are ratios of per-iteration means, t_msm / t_verify; setup time
is reported separately and excluded from the ratios because it is paid
once and amortized over all queries against the same bases.

Instances are derived deterministically from the seed; only wall-clock
readings vary between runs.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass

from . import wire
from .groups import RistrettoGroup
from .msm import msm_bucketed, msm_naive, random_bases, random_coeffs
from .protocol import client_verify, server_respond, setup

log = logging.getLogger(__name__)

CSV_HEADER = "n,t_msm_optimized,t_msm_naive,t_verify,t_setup,speedup_opt,speedup_naive"

# The naive baseline is n full scalar multiplications; at 2^16 terms and
# beyond it dominates total runtime, so it gets fewer repetitions.
NAIVE_CUTOFF = 1 << 16
MIN_NAIVE_ITERATIONS = 3


@dataclass
class BenchRecord:
    n: int
    t_msm_optimized: float
    t_msm_naive: float
    t_verify: float
    t_setup: float
    speedup_opt: float
    speedup_naive: float
    iterations: int
    warmup: int
    threads: int = 1


def _timed(fn, iterations: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    t0 = time.perf_counter()
    for _ in range(iterations):
        fn()
    return (time.perf_counter() - t0) / iterations


def run_benchmark(
    exponents,
    iterations: int = 20,
    warmup: int = 3,
    seed: int = 0,
    threads: int = 1,
    descriptor=None,
    skipped: dict | None = None,
) -> list[BenchRecord]:
    """One BenchRecord per exponent; dimensions that cannot be allocated
    are skipped with the reason recorded in `skipped` (if provided)."""
    if iterations < 1:
        raise ValueError("iterations must be positive")
    if iterations < 10:
        log.warning(
            "fewer than 10 iterations gives unstable means; use >= 10 for "
            "reportable numbers"
        )
    desc = descriptor if descriptor is not None else RistrettoGroup()
    records = []
    for e in exponents:
        n = 1 << e
        try:
            records.append(
                _bench_one(desc, e, n, iterations, warmup, seed, threads)
            )
        except MemoryError:
            reason = f"insufficient memory for n=2^{e}"
            log.warning("%s; skipping", reason)
            if skipped is not None:
                skipped[e] = reason
    return records


def _bench_one(desc, e, n, iterations, warmup, seed, threads):
    rng = random.Random((seed << 8) ^ e)
    bases = random_bases(desc, n, rng)
    coeffs = random_coeffs(desc, n, rng)

    t0 = time.perf_counter()
    sk, state = setup(bases, desc, rng)
    t_setup = time.perf_counter() - t0

    honest = wire.encode_response(server_respond(state.bases, state.merged, coeffs))

    t_opt = _timed(lambda: msm_bucketed(bases, coeffs), iterations, warmup)

    naive_iters = iterations
    if n >= NAIVE_CUTOFF:
        naive_iters = max(MIN_NAIVE_ITERATIONS, iterations // 4)
    t_naive = _timed(
        lambda: msm_naive(bases, coeffs, threads=threads), naive_iters, min(warmup, 1)
    )

    def verify_once():
        resp = wire.decode_response(honest, desc)
        verdict = client_verify(sk, desc, coeffs, resp)
        if not verdict.accepted:
            raise AssertionError("honest response rejected during benchmarking")

    t_verify = _timed(verify_once, iterations, warmup)

    rec = BenchRecord(
        n=n,
        t_msm_optimized=t_opt,
        t_msm_naive=t_naive,
        t_verify=t_verify,
        t_setup=t_setup,
        speedup_opt=t_opt / t_verify,
        speedup_naive=t_naive / t_verify,
        iterations=iterations,
        warmup=warmup,
        threads=threads,
    )
    log.info(
        "n=2^%d: opt=%.6fs naive=%.6fs verify=%.6fs speedup_opt=%.1f "
        "speedup_naive=%.1f",
        e, t_opt, t_naive, t_verify, rec.speedup_opt, rec.speedup_naive,
    )
    return rec


def emit_csv(records, path):
    """Write records with the fixed header; times use 9 decimal places.

    A trailing `threads` column is appended only when some record ran
    with engine parallelism enabled, keeping the default schema stable.
    """
    if not records:
        raise ValueError("no benchmark records to write")
    with_threads = any(r.threads != 1 for r in records)
    header = CSV_HEADER + (",threads" if with_threads else "")
    lines = [header]
    for r in records:
        cols = [
            str(r.n),
            f"{r.t_msm_optimized:.9f}",
            f"{r.t_msm_naive:.9f}",
            f"{r.t_verify:.9f}",
            f"{r.t_setup:.9f}",
            f"{r.speedup_opt:.9f}",
            f"{r.speedup_naive:.9f}",
        ]
        if with_threads:
            cols.append(str(r.threads))
        lines.append(",".join(cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path) -> list[dict]:
    """Read an emitted CSV back into dicts of floats (ints for n)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    names = lines[0].split(",")
    out = []
    for ln in lines[1:]:
        vals = ln.split(",")
        row = {}
        for name, val in zip(names, vals):
            row[name] = int(val) if name in ("n", "threads") else float(val)
        out.append(row)
    return out
