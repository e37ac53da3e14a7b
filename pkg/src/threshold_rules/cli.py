"""Command-line entry point.

    threshold-rules interval --k 1 --schedule power:0.5 --n 64 --trials 10000
    threshold-rules tree --p 0.5 --schedule log:2 --n 64 --trials 1000
    threshold-rules skyline --space uniform2d --schedule power:0.25 --n 128
    threshold-rules verify [--fast]

Exit codes: 0 success, 1 verification or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from pathlib import Path

from . import verify
from .montecarlo import (DEFAULT_SEED, ExperimentConfig, format_summary, run_experiment,
                         write_results_csv)
from .schedule import ScheduleError

log = logging.getLogger("threshold_rules")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
OUTPUT_FILES = ("results.csv", "summary.txt", "manifest.json")
DEFAULT_SCHEDULE = {"interval": "power:0.5", "tree": "log:2", "skyline": "power:0.25"}


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(63)
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threshold-rules",
                                     description="Oblivious threshold rules for online sample selection.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    common.add_argument("--n", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=_seed, help="integer or 'random'")
    common.add_argument("--schedule", help="power:<alpha> | log:<offset> | poly:<exp>:<scale> | "
                                           "const:<c> | explicit:<v1>,<v2>,...")
    common.add_argument("--pool", choices=("adversarial", "exact_n"))
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--force", action="store_true", help="overwrite existing result files")

    p = sub.add_parser("interval", parents=[common], help="unit-interval power-law model")
    p.add_argument("--k", type=float)
    p = sub.add_parser("tree", parents=[common], help="random binary-tree model")
    p.add_argument("--p", type=float)
    p = sub.add_parser("skyline", parents=[common], help="skyline model")
    p.add_argument("--space", help="uniform2d | product2d:<m>,<m> | cube:<d>")

    p = sub.add_parser("verify", help="run the closed-form verification battery")
    p.add_argument("--fast", action="store_true", help="1e3 trials, 5 standard-error tolerance")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, the optional JSON config file and inline flags (flags win)."""
    fields: dict = {"model": args.command, "schedule": DEFAULT_SCHEDULE[args.command],
                    "n": 64, "trials": 1000, "seed": DEFAULT_SEED}
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if loaded.get("model", args.command) != args.command:
            raise UsageError(f"config is for model {loaded['model']!r}, not {args.command!r}")
        fields.update(loaded)
    for name in ("n", "trials", "seed", "schedule", "pool", "k", "p", "space"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    try:
        return ExperimentConfig.from_dict(fields)
    except (ValueError, TypeError, ScheduleError) as exc:
        raise UsageError(str(exc))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or Path("runs") / f"{cfg.model}-{cfg.seed}"
    existing = [f for f in OUTPUT_FILES if (out / f).exists()]
    if existing and not args.force:
        print(f"error: {out} already holds {', '.join(existing)}; pass --force to overwrite",
              file=sys.stderr)
        return EXIT_USAGE

    log.info("running %s trials of %s", cfg.trials, cfg.model)
    report = run_experiment(cfg, workers=max(1, args.threads))
    summary = format_summary(cfg, report)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(report, out / "results.csv")
        (out / "summary.txt").write_text(summary)
        (out / "manifest.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write results to {out}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(summary)
    print(f"wrote {out / 'results.csv'}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = verify.run_checks(fast=args.fast, echo=print)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_FAIL
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
