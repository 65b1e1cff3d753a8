"""Command-line entry point.

Four subcommands share one configuration surface:

* ``plan``     rate and capacity-bound calculators for a parameter point
* ``retrieve`` run the full protocol over a message, verify, persist
* ``audit``    enumerate or sample the privacy and security guarantees
* ``bench``    timed end-to-end runs at a chosen scale

Parameters come from an INI file (``--config``) and/or flags; flags win.
Exit status is 0 on success, 1 on verification failure, unexpected audit
outcome, or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import harness
from ._version import __version__
from .errors import BlindPirError


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--q", type=int, metavar="U64", help="field modulus (prime)")
    common.add_argument("--n", type=int, metavar="N", help="number of servers")
    common.add_argument("--m", type=int, metavar="M", help="number of users")
    common.add_argument("--x", type=int, metavar="X", help="storage security level")
    common.add_argument("--t", metavar="LIST", help="per-user collusion levels, e.g. 1,2")
    common.add_argument("--k", metavar="LIST", help="per-user index ranges, e.g. 3,3")
    common.add_argument("--f", metavar="LIST", help="explicit message evaluation points")
    common.add_argument("--alpha", metavar="LIST", help="explicit server evaluation points")
    common.add_argument("--sample", type=int, metavar="N", help="enable sampling with N draws")
    common.add_argument("--budget", type=int, metavar="N", help="enumeration budget")
    common.add_argument("--out", metavar="PATH", help="persist records to this file")
    common.add_argument("--format", choices=("text", "records"), help="stdout format")

    ap = argparse.ArgumentParser(
        prog="blindpir",
        description="multi-user private information retrieval with colluding and curious servers",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common], help="rate and capacity calculators")
    pr = sub.add_parser("retrieve", parents=[common], help="run retrieval end to end")
    pr.add_argument("--cell", metavar="LIST", help="target index tuple, e.g. 2,1")
    pr.add_argument("--message-hex", metavar="HEX", help="inline message bytes as hex")
    pr.add_argument("--message-file", metavar="PATH", help="message bytes from a file")
    pr.add_argument("--message-random", type=int, metavar="N", help="N random symbols")
    sub.add_parser("audit", parents=[common], help="privacy and security audits")
    pb = sub.add_parser("bench", parents=[common], help="timed end-to-end benchmark")
    pb.add_argument("--blocks", type=int, metavar="N", help="number of rounds to run")
    pb.add_argument("--cell", metavar="LIST", help="target index tuple")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        config = harness.load_config(args.config, overrides)
        if args.command == "plan":
            _, body = harness.cmd_plan(config)
        elif args.command == "retrieve":
            _, body = harness.cmd_retrieve(config)
        elif args.command == "audit":
            suite, body = harness.cmd_audit(config)
            sys.stdout.write(body)
            return 0 if suite.ok else 1
        else:
            _, body = harness.cmd_bench(config)
        sys.stdout.write(body)
        return 0
    except (BlindPirError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
