#!/usr/bin/env python3
"""Run a desk-scale study end to end: simulate a balanced design, then report.

Defaults mirror the standard setup: 9 subjects x 4 conditions x 1 block of
90 selections, with an early-biased pinch distribution so the heuristics have
slips to correct. Everything is deterministic in --seed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from gazekit.cli import main as gazekit_main


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--subjects", type=int, default=9)
    ap.add_argument("--blocks", type=int, default=1)
    ap.add_argument("--out", type=str, default="out/desk_study")
    ap.add_argument("--pinch-offset-mean", type=float, default=-100.0)
    ap.add_argument("--pinch-offset-sd", type=float, default=150.0)
    ap.add_argument("--landing-error-sd", type=float, default=8.0)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    rc = gazekit_main(
        [
            "simulate",
            "--seed", str(args.seed),
            "--condition", "all",
            "--subjects", str(args.subjects),
            "--blocks", str(args.blocks),
            "--out", args.out,
            "--pinch-offset-mean", str(args.pinch_offset_mean),
            "--pinch-offset-sd", str(args.pinch_offset_sd),
            "--landing-error-sd", str(args.landing_error_sd),
        ]
    )
    if rc != 0:
        return rc
    rc = gazekit_main(["validate", args.out, "--replay"])
    if rc != 0:
        return rc
    rc = gazekit_main(["report", "--in", args.out, "--out", str(Path(args.out) / "report")])
    if rc != 0:
        return rc
    print(f"\ndone in {time.perf_counter() - t0:.1f}s; summary:")
    print((Path(args.out) / "report" / "report.txt").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
