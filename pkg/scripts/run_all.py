#!/usr/bin/env python3
"""Run every experiment with its defaults and collect the CSVs.

Each experiment prints its check lines and writes results/<name>.csv; the
exit code is the number of experiments that ended with a failing check or
an error.  A full pass takes a few minutes, dominated by avg-gd and the
two smoothing curves.

    python scripts/run_all.py
    python scripts/run_all.py --only fw-lasso fw-robust --results /tmp/out
"""

import argparse
import sys
import time
from pathlib import Path

from richext import cli


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="run every experiment with its defaults")
    parser.add_argument("--only", nargs="+", metavar="NAME", default=None,
                        help=f"subset of: {', '.join(cli.EXPERIMENTS)}")
    parser.add_argument("--results", default="results",
                        help="output directory (default: results/)")
    args = parser.parse_args(argv)

    names = args.only or list(cli.EXPERIMENTS)
    unknown = [n for n in names if n not in cli.EXPERIMENTS]
    if unknown:
        parser.error(f"unknown experiment(s): {', '.join(unknown)}")

    outdir = Path(args.results)
    outdir.mkdir(parents=True, exist_ok=True)

    failures = 0
    for name in names:
        print(f"=== {name} ===", flush=True)
        t0 = time.perf_counter()
        code = cli.main([name, "--out", str(outdir / f"{name}.csv")])
        failures += code != 0
        print(f"    ({time.perf_counter() - t0:.0f}s)\n", flush=True)
    print(f"{len(names) - failures}/{len(names)} experiments fully passing")
    return failures


if __name__ == "__main__":
    sys.exit(main())
