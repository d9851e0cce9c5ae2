"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 failed precondition
(e.g. a recurrent law for ``simulate``), 4 verification failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional, Sequence

from ..errors import ConfigError, RWREError
from . import commands
from .config import load_config
from .report import write_outputs
from .verify import FAULTS, run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_VERIFY = 4

_COMMANDS = {
    "lambda": lambda cfg, workers: commands.cmd_lambda(cfg),
    "simulate": commands.cmd_simulate,
    "line": commands.cmd_line,
    "lerrw": commands.cmd_lerrw,
}


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwre", description="Random walks in random environment on trees.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("lambda", "analytic exponents of the configured law"),
                        ("simulate", "tree-walk speed, exponents and regenerations"),
                        ("line", "one-dimensional formulas, m(n, lambda) and p(n, a)"),
                        ("lerrw", "reinforced walk speed and representation tests")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", metavar="PATH", help="configuration file (key = value lines)")
        sp.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes for replicates")
        sp.add_argument("--out", metavar="PATH", help="output directory (overrides output.path)")
        sp.add_argument("--format", choices=("csv", "jsonl"), help="table format (overrides output.format)")
        sp.add_argument("--timing", action="store_true", help="record wall-clock time in the report")
    vp = sub.add_parser("verify", help="run the cross-check suite")
    vp.add_argument("level", nargs="?", choices=("quick", "full"), default="quick")
    vp.add_argument("--inject-fault", choices=FAULTS, help="corrupt a formula to exercise the suite")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        res = run_suite(args.level, fault=args.inject_fault)
        failed = [r.name for r in res if not r.passed]
        if failed:
            print("failed invariants: " + ", ".join(failed))
            return EXIT_VERIFY
        print(f"all {len(res)} checks passed")
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.set("seed", args.seed)
        if args.out is not None:
            cfg.set("output.path", args.out)
        if args.format is not None:
            cfg.set("output.format", args.format)
        if cfg["output.format"] not in ("csv", "jsonl"):
            raise ConfigError("format must be csv or jsonl", field="output.format",
                              line=cfg.lines.get("output.format"))
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1", field="workers")
        t0 = time.perf_counter()
        rep = _COMMANDS[args.command](cfg, args.workers)
        elapsed = time.perf_counter() - t0
        # wall-clock time is kept out of files unless asked for, so that
        # repeated runs produce identical bytes
        if args.timing:
            rep.wall_clock = elapsed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RWREError, ValueError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    for line in rep.summary_lines():
        print(line)
    print(f"elapsed: {elapsed:.2f}s", file=sys.stderr)
    out = cfg["output.path"]
    if out:
        for path in write_outputs(rep, out, cfg["output.format"]):
            print(f"wrote {path}")
    return EXIT_OK if rep.passed else EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
