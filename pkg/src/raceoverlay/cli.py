"""Command-line entry points: run, replay, bench, export-dataset.

Exit codes: 0 success, 2 configuration error, 3 runtime error.  Log level
comes from OVERLAY_LOG_LEVEL (error, warn, info, debug); logs go to stderr
so canonical output lines stay clean on stdout.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import pipeline
from .errors import BindFailure, ConfigError, Malformed, OverlayError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    level_name = os.environ.get("OVERLAY_LOG_LEVEL", "info").strip().lower()
    level = _LOG_LEVELS.get(level_name, logging.INFO)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raceoverlay",
        description="Real-time car tracking and broadcast-overlay pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the live pipeline")
    run_p.add_argument("--config", required=True, help="pipeline config JSON file")
    run_p.add_argument("--listen", help="override listen address (host:port)")
    run_p.add_argument("--fps", type=float, help="override frame rate")
    run_p.add_argument("--record", help="append every published frame line to this file")
    run_p.add_argument("--seed", type=int, help="override the scenario seed (u64)")
    run_p.add_argument(
        "--fixed-clock",
        action="store_true",
        help="deterministic timestamps (frame_id * 1e6 / fps us) and no pacing",
    )
    run_p.add_argument("--frames", type=int, help="stop after this many frames")

    replay_p = sub.add_parser("replay", help="re-publish a recorded session")
    replay_p.add_argument("--input", required=True, help="recording file")
    replay_p.add_argument("--listen", required=True, help="listen address (host:port)")
    replay_p.add_argument("--fps", type=float, required=True, help="playback frame rate")

    bench_p = sub.add_parser("bench", help="measure per-frame throughput, no network")
    bench_p.add_argument("--config", required=True, help="pipeline config JSON file")
    bench_p.add_argument("--frames", type=int, required=True, help="frames to process")

    export_p = sub.add_parser("export-dataset", help="write an auto-tagged dataset")
    export_p.add_argument("--config", required=True, help="pipeline config JSON file")
    export_p.add_argument("--frames", type=int, required=True, help="frames to generate")
    export_p.add_argument("--out", required=True, help="output dataset file (NDJSON)")

    return parser


def _run_command(args: argparse.Namespace) -> int:
    config = pipeline.load_config(args.config)
    if args.record is not None and config.replay is not None:
        raise ConfigError("record and replay are mutually exclusive (--record given, replay set)")
    if args.listen is not None:
        config = replace(config, listen=args.listen)
    if args.fps is not None:
        config = replace(config, fps=args.fps, scenario=replace(config.scenario, fps=args.fps))
    if args.record is not None:
        config = replace(config, record=args.record)
    if args.seed is not None:
        config = replace(config, scenario=replace(config.scenario, seed=args.seed))
    if args.fixed_clock:
        config = replace(config, fixed_clock=True)
    return pipeline.run(config, max_frames=args.frames)


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_command(args)
        if args.command == "replay":
            return pipeline.replay(args.input, args.listen, args.fps)
        if args.command == "bench":
            config = pipeline.load_config(args.config)
            pipeline.bench(config, args.frames)
            return EXIT_OK
        if args.command == "export-dataset":
            config = pipeline.load_config(args.config)
            count = pipeline.export_dataset_run(config, args.frames, args.out)
            logging.getLogger(__name__).info("wrote %d records to %s", count, args.out)
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BindFailure, Malformed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OverlayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
