"""Command-line entry point.

    qnn-landscape <subcommand> --config <path> [--seed S] [--out DIR] [--threads K]

Subcommands: train, landscape, prob-localmin, lemma1, prop1, verify-haar,
local-loss.  Each run writes <output_path>.csv (per-row records) and
<output_path>.json (config echo plus summary), byte-identical for a fixed
config and seed regardless of the thread count.

Exit codes: 0 success, 1 configuration/usage error, 2 a verification check
failed its tolerance.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time

from .config import EXPERIMENTS, ConfigError, load_config
from .haar_checks import run_verify_haar
from .records import csv_text, json_text
from .state_learning import run_landscape, run_prob_localmin, run_train
from .theory_checks import run_lemma1_check, run_local_loss_check, run_prop1_check

RUNNERS = {
    "train": run_train,
    "landscape": run_landscape,
    "prob-localmin": run_prob_localmin,
    "lemma1": run_lemma1_check,
    "prop1": run_prop1_check,
    "verify-haar": run_verify_haar,
    "local-loss": run_local_loss_check,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnn-landscape", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None,
                       help="directory overriding the output_path directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: QNN_LANDSCAPE_THREADS or 1)")
    return parser


def _resolve_threads(value) -> int:
    if value is None:
        value = os.environ.get("QNN_LANDSCAPE_THREADS", "1")
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"--threads must be an integer, got {value!r}")
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    return threads


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed a message; --help exits 0
        return 0 if exc.code in (0, None) else 1
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        config = load_config(args.config)
        if config.experiment != args.subcommand:
            raise ConfigError(
                f"config is for experiment '{config.experiment}' "
                f"but subcommand is '{args.subcommand}'"
            )
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must fit in 64 unsigned bits")
            config = dataclasses.replace(config, seed=args.seed)
        threads = _resolve_threads(args.threads)
        base = config.output_path
        if args.out is not None:
            base = os.path.join(args.out, os.path.basename(base))
        parent = os.path.dirname(base)
        if parent:
            os.makedirs(parent, exist_ok=True)
        csv_path, json_path = base + ".csv", base + ".json"
        for path in (csv_path, json_path):
            try:
                with open(path, "w", encoding="utf-8"):
                    pass
            except OSError as exc:
                raise ConfigError(f"output path not writable: {path}: {exc}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    started = time.monotonic()
    result = RUNNERS[args.subcommand](config, threads=threads)
    elapsed = time.monotonic() - started

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(result.header, result.rows))
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(json_text(result.summary))

    checks = result.summary.get("checks", {})
    for name in sorted(checks):
        state = "pass" if checks[name].get("passed") else "FAIL"
        print(f"{args.subcommand}: {name}: {state}")
    if result.passed is not None:
        print(f"{args.subcommand}: overall: {'pass' if result.passed else 'FAIL'}")
    print(f"wrote {csv_path} and {json_path}")
    # wall time goes to stderr only: the output files must be reproducible
    print(f"elapsed: {elapsed:.3f}s", file=sys.stderr)
    return 0 if result.passed in (None, True) else 2


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
