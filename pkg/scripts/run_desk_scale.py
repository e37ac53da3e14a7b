#!/usr/bin/env python3
"""Desk-scale runs for all three models, one summary line per configuration.

    python3 scripts/run_desk_scale.py [--trials-scale 0.1] [--threads 8]
"""

import argparse
import os
import time

from threshold_rules.montecarlo import ExperimentConfig, run_experiment

CONFIGS = [
    ExperimentConfig("interval", "power:0", 64, trials=10_000, k=1),
    ExperimentConfig("interval", "power:0.5", 64, trials=10_000, k=1),
    ExperimentConfig("interval", "power:0", 64, trials=10_000, k=2),
    ExperimentConfig("interval", "power:0.5", 64, trials=10_000, k=2),
    ExperimentConfig("tree", "log:2", 64, trials=1000, p=0.5),
    ExperimentConfig("tree", "const:4", 64, trials=1000, p=0.5),
    ExperimentConfig("skyline", "power:0.25", 128, trials=1000, space="uniform2d"),
    ExperimentConfig("skyline", "power:0.25", 128, trials=1000, space="product2d:power:2,beta:2:3"),
    ExperimentConfig("skyline", "power:0.25", 128, trials=1000, space="cube:3"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials-scale", type=float, default=1.0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    print(f"{'model':9} {'schedule':11} {'setting':28} {'E[ratio]':>9} {'ratio/means':>11} "
          f"{'bound':>8} {'events':>7} {'sec':>6}")
    for cfg in CONFIGS:
        cfg.trials = max(2, int(cfg.trials * args.trials_scale))
        start = time.perf_counter()
        rep = run_experiment(cfg, workers=args.threads)
        setting = {"interval": f"k={cfg.k:g}", "tree": f"p={cfg.p:g}",
                   "skyline": cfg.space}[cfg.model]
        print(f"{cfg.model:9} {str(cfg.threshold_schedule()):11} {setting:28} "
              f"{rep.mean_expected_ratio:9.4f} {rep.mean_ratio_of_expectations:11.4f} "
              f"{rep.bound:8.3f} {rep.event_rate:7.4f} {time.perf_counter() - start:6.1f}")


if __name__ == "__main__":
    main()
