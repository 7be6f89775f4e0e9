#!/usr/bin/env python3
"""Render final-fraction histograms for both schemes at 1/2 and 1/3 splits.

Each SVG shows the spread of the tracked node's final fraction; the
proposer-takes-all histograms carry their beta-limit density overlay, the
shared-reward ones a marker at the predicted mean (the initial share).

Usage:
    python scripts/make_histograms.py [--reps 10000] [--out DIR]
"""
import argparse
from pathlib import Path

from stakesim import ExperimentConfig, beta_limit_params, empirical_stats, run_experiment
from stakesim.cli import render_histogram_svg


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=10_000)
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--bins", type=int, default=100)
    parser.add_argument("--seed", type=int, default=4_242)
    parser.add_argument("--out", type=Path, default=Path("histograms_out"))
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    splits = {"half": (50.0, 50.0), "third": (100.0 / 3.0, 200.0 / 3.0)}
    for split_name, stakes in splits.items():
        share = stakes[0] / sum(stakes)
        for scheme in ("constant", "frd"):
            config = ExperimentConfig(
                initial_stakes=stakes,
                scheme=scheme,
                reward_budget_K=200.0,
                steps_n=args.steps,
                repetitions=args.reps,
                base_seed=args.seed,
            )
            result = run_experiment(config)
            stats = empirical_stats(result.final_fractions[:, 0], bins=args.bins)
            beta = None
            if scheme == "constant":
                beta = beta_limit_params(stakes, config.reward_budget_K, 0)
            svg = render_histogram_svg(
                stats,
                beta=beta,
                mean_marker=share,
                title=f"{scheme}, initial share {share:.4g}, n={args.steps}",
            )
            path = args.out / f"hist_{split_name}_{scheme}.svg"
            path.write_bytes(svg)
            print(f"wrote {path}  (mean={stats.mean:.4f}, variance={stats.variance:.3e})")


if __name__ == "__main__":
    main()
