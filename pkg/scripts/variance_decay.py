#!/usr/bin/env python3
"""Track the cross-repetition mean and variance of one node's fraction over
time, for the shared-reward scheme vs the proposer-takes-all baseline.

The shared-reward variance decays like ln(n)/n while the baseline's climbs
toward its beta limit.  Writes one stats.csv per scheme and prints the
observed decay ratios next to the leading-order law.

Usage:
    python scripts/variance_decay.py [--share 0.3333] [--reps 500] [--out DIR]
"""
import argparse
import math
from pathlib import Path

from stakesim import ExperimentConfig, RecordPolicy, time_series_stats
from stakesim.cli import write_stats_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--share", type=float, default=1 / 3, help="tracked node's initial share")
    parser.add_argument("--reps", type=int, default=500)
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--stride", type=int, default=50)
    parser.add_argument("--seed", type=int, default=20_26)
    parser.add_argument("--out", type=Path, default=Path("variance_decay_out"))
    args = parser.parse_args()

    stakes = (100.0 * args.share, 100.0 * (1.0 - args.share))
    args.out.mkdir(parents=True, exist_ok=True)
    for scheme in ("frd", "constant"):
        config = ExperimentConfig(
            initial_stakes=stakes,
            scheme=scheme,
            reward_budget_K=200.0,
            steps_n=args.steps,
            repetitions=args.reps,
            base_seed=args.seed,
            record=RecordPolicy(stride=args.stride, track_nodes=(0,)),
        )
        series = time_series_stats(config)
        path = args.out / f"stats_{scheme}.csv"
        path.write_bytes(write_stats_csv(series))
        print(f"[{scheme}] wrote {path}")
        variances = series.variance()[:, 0]
        steps = series.steps
        print(f"  {'step':>6}  {'variance':>12}")
        for step, var in zip(steps, variances):
            if step in (0, args.stride, args.steps // 10, args.steps // 2, args.steps):
                print(f"  {step:>6}  {var:>12.3e}")
        if scheme == "frd":
            early = steps.index(args.steps // 10)
            late = steps.index(args.steps)
            observed = variances[late] / variances[early]
            n_late, n_early = args.steps, args.steps // 10
            lead = (n_late * math.log(n_late) / (200.0 * n_late + 100.0) ** 2) / (
                n_early * math.log(n_early) / (200.0 * n_early + 100.0) ** 2
            )
            print(f"  decay var(n={n_late})/var(n={n_early}): observed {observed:.3f}, "
                  f"ln(n)/n law {lead:.3f}")


if __name__ == "__main__":
    main()
