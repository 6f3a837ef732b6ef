#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the full per-frame pipeline computation (`raceoverlay bench`) in a
subprocess per backend, because the backend is chosen at import time.

Usage: python benchmarks/compare_backends.py [--config configs/bench10.json]
       [--frames 5000]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def run_backend(backend: str, config: str, frames: int) -> dict:
    env = dict(os.environ, OVERLAY_KERNEL_BACKEND=backend)
    out = subprocess.check_output(
        [
            sys.executable,
            "-m",
            "raceoverlay",
            "bench",
            "--config",
            config,
            "--frames",
            str(frames),
        ],
        env=env,
        text=True,
        stderr=subprocess.DEVNULL,
    )
    return json.loads(out)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(REPO / "configs" / "bench10.json"))
    parser.add_argument("--frames", type=int, default=5000)
    args = parser.parse_args()

    reports = {}
    for backend in ("c", "py"):
        try:
            reports[backend] = run_backend(backend, args.config, args.frames)
        except subprocess.CalledProcessError as exc:
            print(f"{backend}: failed ({exc})", file=sys.stderr)

    for backend, report in reports.items():
        print(
            f"{report['backend']:>7}: {report['fps']:>10.1f} fps   "
            f"p50 {report['p50_us']:>8.1f} us   p99 {report['p99_us']:>8.1f} us"
        )
    if len(reports) == 2:
        speedup = reports["c"]["fps"] / reports["py"]["fps"]
        print(f"speedup: {speedup:.2f}x (compiled over pure Python)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
