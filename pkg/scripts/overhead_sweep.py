#!/usr/bin/env python3
"""Interval model: trade-off between mean gap and selection overhead as alpha varies.

Prints simulated and closed-form E[Gap_n] and E[T_n] for c_i = i^-alpha, next
to the exact optimal gap of the best n out of E[T_n] samples.
"""

import argparse

import numpy as np

from threshold_rules import interval
from threshold_rules.schedule import power_decay


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, default=2.0)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    q = interval.PowerLawQuality(args.k)
    rng = np.random.default_rng(args.seed)
    print(f"k={args.k:g} n={args.n} trials={args.trials}")
    print(f"{'alpha':>5} {'gap sim':>9} {'gap exact':>9} {'T_n sim':>10} {'T_n exact':>10} "
          f"{'opt gap':>9} {'gap/opt':>7}")
    for alpha in np.linspace(0.0, 0.9, 10):
        s = power_decay(float(alpha))
        gaps, seen = interval.simulate_gap_and_overhead(s, q, args.n, args.trials, rng)
        gap = interval.expected_gap_closed_form(s, q, args.n)
        overhead = interval.expected_overhead_closed_form(s, q, args.n)
        opt = interval.optimal_mean_gap_exact(args.k, args.n, int(round(overhead)))
        print(f"{alpha:5.2f} {gaps.mean():9.5f} {gap:9.5f} {seen.mean():10.1f} {overhead:10.1f} "
              f"{opt:9.5f} {gap / opt:7.3f}")


if __name__ == "__main__":
    main()
