"""Run every bundled scenario through the commands it supports and collect the outputs."""

import argparse
import sys
import time
from pathlib import Path

from homsync.cli import run_scenario

RUNS = [
    ("sweep", "paper_fig10"),
    ("autocorr", "paper_sec3_direct"),
    ("xcorr", "paper_sec3_direct"),
    ("xcorr", "paper_sec3_mediaconverter"),
    ("jitter-budget", "paper_sec3_mediaconverter"),
    ("jitter-budget", "paper_fig8_loss"),
    ("drift", "paper_sec3_drift"),
    ("vis-budget", "paper_sec6_hom"),
    ("hom", "paper_sec6_hom"),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="root output directory")
    ap.add_argument("--seed", type=int, default=None, help="override every scenario seed")
    args = ap.parse_args(argv)
    status = 0
    for command, name in RUNS:
        print(f"# {name} {command}")
        t0 = time.perf_counter()
        code = run_scenario(name, command, args.seed, Path(args.out) / name)
        print(f"# exit {code} in {time.perf_counter() - t0:.1f}s\n")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
