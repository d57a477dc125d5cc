"""Command-line entry point: ``sonostyle <subcommand> --config FILE [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, PipelineConfig, parse_config
from .pipeline import (PipelineError, cmd_evaluate, cmd_ingest, cmd_prepare, cmd_report, cmd_train,
                       cmd_transfer)

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
SUBCOMMANDS = ("ingest", "prepare", "train", "transfer", "evaluate", "report")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed {text} is not a u64")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("--jobs must be ≥ 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sonostyle", description="Optical-to-sonar style transfer pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config file")
        p.add_argument("--seed", type=_u64, default=None, help="override train.seed")
        p.add_argument("--force", action="store_true", help="regenerate existing outputs")
        p.add_argument("--jobs", type=_positive, default=1, help="worker processes")
        if name == "report":
            p.add_argument("--format", choices=("csv", "markdown", "both"), default="both")
    return parser


def setup_logging() -> None:
    level_name = os.environ.get("SONO_LOG", "warn").lower()
    if level_name not in LOG_LEVELS:
        raise ConfigError(f"SONO_LOG must be one of {', '.join(LOG_LEVELS)}, got {level_name!r}")
    logging.basicConfig(level=LOG_LEVELS[level_name], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def run(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    if args.command == "ingest":
        res = cmd_ingest(cfg)
        print(f"ingested {res.done} images ({res.skipped} skipped)")
    elif args.command == "prepare":
        res = cmd_prepare(cfg, force=args.force)
        print(f"prepared {res.done} images ({res.skipped} up to date)")
    elif args.command == "train":
        res = cmd_train(cfg)
        print(f"trained {res.done} iterations")
    elif args.command == "transfer":
        res = cmd_transfer(cfg, force=args.force, jobs=args.jobs)
        print(f"generated {res.done} images ({res.skipped} up to date, {res.failed} failed)")
        return 0 if res.ok else 1
    elif args.command == "evaluate":
        bundle = cmd_evaluate(cfg, jobs=args.jobs)
        print(f"evaluated {len(bundle.quality)} images and {len(bundle.similarity)} pairs")
    elif args.command == "report":
        formats = ("csv", "markdown") if args.format == "both" else (args.format,)
        print(f"report written to {cmd_report(cfg, formats)}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging()
        cfg = parse_config(args.config).with_seed(args.seed)
        return run(args, cfg)
    except (ConfigError, PipelineError, OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
