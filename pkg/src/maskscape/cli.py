"""Command line front end: each subcommand runs the pipeline through one stage."""

from __future__ import annotations

import argparse
import sys

from .config import apply_overrides, default_config, load_config
from .errors import StageFailure
from .pipeline import run_pipeline

# Subcommand -> last stage it runs. Later subcommands execute (or skip, when
# artifacts exist) everything before their stage, so any of them can cold-start
# an empty output directory.
_COMMANDS = {
    "gen-scene": "scene",
    "make-warpback-data": "warpback",
    "train-inpainter": "inpainter",
    "build-semfield": "semfield",
    "train-appearance": "appearance",
    "render": "frames",
    "evaluate": "evaluate",
    "pipeline": "evaluate",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskscape",
        description="Turn one semantic mask into a view-consistent 3D scene, "
                    "rendered frames and an evaluation report.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, stage in _COMMANDS.items():
        p = sub.add_parser(command, help=f"run the pipeline through the '{stage}' stage")
        p.add_argument("--config", metavar="PATH",
                       help="config file; defaults apply when omitted")
        p.add_argument("--out", metavar="DIR", default="out",
                       help="output directory (default: out)")
        p.add_argument("--seed", type=int, metavar="INT",
                       help="override pipeline.seed")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       dest="overrides", help="override one config key; repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        apply_overrides(cfg, args.overrides)
        if args.seed is not None:
            cfg["pipeline.seed"] = args.seed
        run_pipeline(cfg, args.out, through=_COMMANDS[args.command],
                     log=lambda line: print(line, flush=True))
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
