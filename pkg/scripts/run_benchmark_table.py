#!/usr/bin/env python3
"""Run the four stock benchmark configurations and print the report table.

Usage:
    python scripts/run_benchmark_table.py [--reps 20000] [--seed 1009] [--out DIR]

Equivalent to `stakesim table1`, but driven through the Python API so the
rows are easy to post-process.
"""
import argparse
from pathlib import Path

from stakesim.cli import builtin_benchmark_configs, table1_report, write_report_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=1009)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    configs = builtin_benchmark_configs(repetitions=args.reps, base_seed=args.seed)
    rows, text = table1_report(configs, workers=args.workers)
    print(f"base_seed={args.seed}  repetitions={args.reps}")
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.csv").write_bytes(write_report_csv(rows))
        print(f"wrote {args.out / 'report.csv'}")


if __name__ == "__main__":
    main()
