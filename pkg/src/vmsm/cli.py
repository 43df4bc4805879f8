"""Command-line interface.

    vmsm serve          run an outsourcing server
    vmsm outsource      set up a session, send queries, verify responses
    vmsm adversary-lab  Monte Carlo soundness experiments (toy backend)
    vmsm bench          speedup benchmark, CSV output

Exit codes for `outsource`: 0 all responses accepted, 2 some response
rejected, 1 transport or usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import secrets
import sys

from . import adversary, bench, service, wire
from .groups import PRODUCTION, TOY, make_group
from .msm import random_bases, random_coeffs
from .protocol import client_verify, setup

log = logging.getLogger(__name__)


def _parse_address(text: str):
    host, sep, port = text.rpartition(":")
    if not sep:
        raise argparse.ArgumentTypeError("address must look like HOST:PORT")
    return host or "0.0.0.0", int(port)


def _parse_exponents(text: str):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part]


def _add_backend_args(p):
    p.add_argument(
        "--backend", choices=[PRODUCTION, TOY], default=PRODUCTION,
        help="group backend (default: production)",
    )
    p.add_argument(
        "--q", type=int, default=None,
        help="toy group order (prime; toy backend only)",
    )


def _descriptor(args):
    if args.backend == PRODUCTION and args.q is not None:
        raise SystemExit("--q applies to the toy backend only")
    return make_group(args.backend, args.q)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmsm",
        description="verifiable outsourcing of multi-scalar multiplication",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run an outsourcing server")
    p.add_argument("--listen", type=_parse_address, default=("0.0.0.0", 9653))
    _add_backend_args(p)
    p.add_argument("--capacity", type=int, default=128, help="max cached sessions")
    p.add_argument(
        "--server-mode", choices=service.SERVER_MODES, default="honest",
        help="fault injection mode (testing only)",
    )
    p.add_argument("--bases-file", help="preload bases so clients may omit them")

    p = sub.add_parser("outsource", help="outsource MSM queries and verify")
    p.add_argument("--connect", type=_parse_address, required=True)
    _add_backend_args(p)
    p.add_argument("--n", type=int, default=1024, help="number of bases")
    p.add_argument("--queries", type=int, default=1)
    p.add_argument("--key-file", help="persist or reuse the secret key")
    p.add_argument("--bases-file", help="persist or reuse the bases vector")
    p.add_argument("--seed", type=int, help="seed query/instance randomness")

    p = sub.add_parser("adversary-lab", help="soundness experiments")
    p.add_argument(
        "--strategy", choices=sorted(adversary.STRATEGIES), required=True
    )
    p.add_argument("--q", type=int, default=251)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--executions", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write a key=value report file")

    p = sub.add_parser("bench", help="speedup benchmark")
    p.add_argument("--exponents", type=_parse_exponents, default=list(range(10, 19)))
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--threads", type=int, default=1)

    return parser


def cmd_serve(args) -> int:
    desc = _descriptor(args)
    default_bases = None
    if args.bases_file:
        default_bases = service.load_bases(args.bases_file, desc)
    store = service.SessionStore(capacity=args.capacity)
    try:
        service.serve(args.listen, desc, store, args.server_mode, default_bases)
    except KeyboardInterrupt:
        pass
    return 0


def cmd_outsource(args) -> int:
    desc = _descriptor(args)
    rng = random.Random(args.seed) if args.seed is not None else secrets.SystemRandom()

    if args.key_file and os.path.exists(args.key_file):
        key_desc, r, rho = service.load_secret_key(args.key_file)
        if key_desc.backend_id != desc.backend_id or key_desc.order != desc.order:
            print("key file does not match the requested backend", file=sys.stderr)
            return 1
        n = len(rho)
        if args.bases_file and os.path.exists(args.bases_file):
            bases = service.load_bases(args.bases_file, desc)
        else:
            print("a persisted key needs its bases file", file=sys.stderr)
            return 1
        if len(bases) != n:
            print("bases file length does not match the key", file=sys.stderr)
            return 1
        sk, state = service.rebuild_keypair(desc, r, rho, bases)
    else:
        if args.bases_file and os.path.exists(args.bases_file):
            bases = service.load_bases(args.bases_file, desc)
        else:
            bases = random_bases(desc, args.n, rng)
            if args.bases_file:
                service.save_bases(args.bases_file, bases)
        sk, state = setup(bases, desc, rng)
        if args.key_file:
            service.save_secret_key(args.key_file, sk)

    rejected = 0
    try:
        with service.OutsourceClient(args.connect, desc) as client:
            session_id = client.upload_setup(state)
            print(f"session {session_id.hex()} registered (n={len(state.bases)})")
            for i in range(args.queries):
                x = random_coeffs(desc, len(state.bases), rng)
                resp = client.query(session_id, x)
                verdict = client_verify(sk, desc, x, resp)
                if verdict.accepted:
                    print(
                        f"query {i + 1}: accept "
                        f"{verdict.output.to_bytes().hex()} "
                        f"({verdict.elapsed_seconds * 1e3:.3f} ms)"
                    )
                else:
                    rejected += 1
                    print(f"query {i + 1}: REJECT")
    except (OSError, EOFError, service.ServiceError, wire.WireDecodeError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 1
    return 2 if rejected else 0


def cmd_adversary_lab(args) -> int:
    report = adversary.estimate_soundness(
        q_toy=args.q,
        n=args.n,
        strategy=args.strategy,
        trials=args.trials,
        executions_e=args.executions,
        seed=args.seed,
    )
    sys.stdout.write(report.to_text())
    if args.report:
        report.write(args.report)
        print(f"report written to {args.report}")
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    skipped: dict = {}
    records = bench.run_benchmark(
        args.exponents,
        iterations=args.iterations,
        warmup=args.warmup,
        seed=args.seed,
        threads=args.threads,
        skipped=skipped,
    )
    for e, reason in skipped.items():
        print(f"skipped e={e}: {reason}")
    if not records:
        print("no benchmark records produced", file=sys.stderr)
        return 1
    bench.emit_csv(records, args.out)
    for r in records:
        print(
            f"n={r.n:>7}  msm_opt={r.t_msm_optimized:.6f}s  "
            f"msm_naive={r.t_msm_naive:.6f}s  verify={r.t_verify:.6f}s  "
            f"speedup_opt={r.speedup_opt:.1f}x  speedup_naive={r.speedup_naive:.1f}x"
        )
    print(f"csv written to {args.out}")
    return 0


_COMMANDS = {
    "serve": cmd_serve,
    "outsource": cmd_outsource,
    "adversary-lab": cmd_adversary_lab,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
