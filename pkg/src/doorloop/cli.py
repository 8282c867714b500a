"""Command line entry point: ``doorloop {run,openloop,replay,dump-transitions,gen-suite}``.

Exit codes: 0 success, 1 usage, 2 parse error (suite, config or record),
3 acceptance threshold breached under ``--assert``.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .common import ErrorCode
from .config import ConfigError, load_config
from .harness import (METHODS, RecordParseError, ReplayMismatch, SuiteConfig, binomial_band, per_door_csv,
                      replay, run_openloop, run_suite, table_markdown, write_records)
from .planner import dump_transitions
from .primitives import FaultInjection
from .suite import SuiteParseError, dump_suite, gen_suite

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_ASSERT = 0, 1, 2, 3
DEFAULT_ASSERT = {"closed-oracle": 0.9}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fault(text: str) -> FaultInjection:
    code, _, n = text.partition(":")
    try:
        return FaultInjection(ErrorCode(code.upper()), int(n) if n else 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected CODE[:occurrence], got {text!r}") from None


def _common(p: argparse.ArgumentParser, method_default: str) -> None:
    p.add_argument("--suite", default="suite_field20", help="suite file or shipped suite name")
    p.add_argument("--method", choices=METHODS, default=method_default)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--doors", nargs="+", help="restrict to these door ids")
    p.add_argument("--config", help="config YAML (default: shipped defaults)")
    p.add_argument("--swing-classifier", choices=("haptic", "coin"))
    p.add_argument("--fault", type=_fault, action="append", default=[],
                   help="inject CODE[:occurrence] in every episode, e.g. GRASP_MISS:1")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.add_argument("--records", help="directory for per-episode JSON records")
    p.add_argument("--assert", dest="assert_rate", nargs="?", type=float, const=-1.0,
                   help="exit 3 if the overall rate is below RATE (run) or outside 3 sigma (openloop)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="doorloop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a suite and print the success table")
    _common(run, "closed-oracle")
    run.add_argument("--markdown", action="store_true", help="render a markdown table instead of CSV")
    ol = sub.add_parser("openloop", help="open-loop baseline with per-door analytic expectations")
    _common(ol, "open-random")
    rp = sub.add_parser("replay", help="print and re-simulate a stored episode record")
    rp.add_argument("record")
    rp.add_argument("--suite", default="suite_field20")
    rp.add_argument("--config")
    rp.add_argument("--no-rerun", action="store_true")
    dt = sub.add_parser("dump-transitions", help="print the planner transition table")
    dt.add_argument("--all", action="store_true", help="include unreachable rows")
    gs = sub.add_parser("gen-suite", help="write a random suite")
    gs.add_argument("--n", type=int, default=20)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--locked-fraction", type=float, default=0.0)
    gs.add_argument("--out")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _suite_config(args) -> SuiteConfig:
    cfg = load_config(args.config)
    if args.swing_classifier:
        cfg = cfg.replace(primitives={"swing_classifier": args.swing_classifier})
    return SuiteConfig(suite_path=args.suite, trials_per_door=args.trials, seed=args.seed, method=args.method,
                       faults=tuple(args.fault), parallel_workers=args.workers,
                       door_ids=tuple(args.doors) if args.doors else None, config=cfg)


def _cmd_run(args) -> int:
    sc = _suite_config(args)
    result = run_suite(sc)
    if args.records:
        write_records(result.records, args.records)
    _emit(table_markdown([result.rows]) if args.markdown else result.to_csv(), args.out)
    if args.assert_rate is not None:
        need = DEFAULT_ASSERT.get(sc.method) if args.assert_rate < 0 else args.assert_rate
        if need is None:
            print(f"--assert needs an explicit rate for {sc.method}", file=sys.stderr)
            return EXIT_USAGE
        overall = next((r["rate"] for r in result.rows if r["handle_type"] == "all"), Fraction(1))
        if overall < Fraction(need).limit_denominator(10 ** 6):
            print(f"assert: overall rate {float(overall):.4f} < {need}", file=sys.stderr)
            return EXIT_ASSERT
    return EXIT_OK


def _cmd_openloop(args) -> int:
    sc = _suite_config(args)
    result, rows = run_openloop(sc)
    if args.records:
        write_records(result.records, args.records)
    _emit(per_door_csv(rows), args.out)
    if args.assert_rate is not None:
        n = sum(r["trials"] for r in rows)
        if n:
            expected = sum(r["expected"] * r["trials"] for r in rows) / n
            var = sum(float(r["expected"] * (1 - r["expected"])) * r["trials"] for r in rows) / n ** 2
            got = sum(r["successes"] for r in rows) / n
            if abs(got - float(expected)) > 3 * var ** 0.5:
                lo, hi = binomial_band(float(expected), n)
                print(f"assert: open-loop rate {got:.4f} outside [{lo:.4f}, {hi:.4f}]", file=sys.stderr)
                return EXIT_ASSERT
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "openloop":
            return _cmd_openloop(args)
        if args.command == "replay":
            cfg = load_config(args.config)
            sys.stdout.write(replay(args.record, args.suite, cfg, rerun=not args.no_rerun))
            return EXIT_OK
        if args.command == "dump-transitions":
            sys.stdout.write(dump_transitions(include_unreachable=args.all))
            return EXIT_OK
        if args.command == "gen-suite":
            _emit(dump_suite(gen_suite(args.n, args.seed, locked_fraction=args.locked_fraction)), args.out)
            return EXIT_OK
    except (SuiteParseError, ConfigError, RecordParseError, ReplayMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
