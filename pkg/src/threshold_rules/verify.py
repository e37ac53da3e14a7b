"""Built-in verification battery: closed forms against independent oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import interval, skyline, tree
from .schedule import power_decay


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class Settings:
    trials: int
    sigmas: float
    mc_samples: int
    seed: int = 12345

    @classmethod
    def default(cls, fast: bool = False) -> "Settings":
        if fast:
            return cls(trials=1000, sigmas=5.0, mc_samples=10**4)
        return cls(trials=10**5, sigmas=3.0, mc_samples=10**6)

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, *key])


def check_gamma_identity(cfg: Settings) -> CheckResult:
    worst = 0.0
    for k in (0.5, 1, 2, 3):
        for n in range(1, 201):
            lhs, rhs = interval.gamma_sum_identity(k, n)
            worst = max(worst, abs(lhs - rhs) / rhs)
    return CheckResult("gamma-sum identity", worst < 1e-9, f"max rel err {worst:.2e}")


def check_order_statistics(cfg: Settings) -> CheckResult:
    worst = 0.0
    for j, (k, t, m) in enumerate([(1, 3, 2), (1, 9, 9), (2, 20, 10), (4, 50, 25)]):
        rng = cfg.rng(1, j)
        gaps = np.sort(rng.random((cfg.trials, t)) ** (1.0 / k), axis=1)[:, m - 1]
        exact = interval.order_statistic_expectation(k, t, m)
        se = gaps.std(ddof=1) / math.sqrt(cfg.trials)
        worst = max(worst, abs(gaps.mean() - exact) / se)
    return CheckResult("order-statistic expectation", worst <= cfg.sigmas,
                       f"max |z| {worst:.2f} (limit {cfg.sigmas:g})")


def check_gap_and_overhead(cfg: Settings) -> CheckResult:
    worst = 0.0
    for k in (1, 2, 4):
        for a in (0.0, 0.25, 0.5):
            for n in (16, 64):
                s, q = power_decay(a), interval.PowerLawQuality(k)
                gaps, seen = interval.simulate_gap_and_overhead(
                    s, q, n, cfg.trials, cfg.rng(2, k, int(a * 100), n))
                for sim, exact in ((gaps, interval.expected_gap_closed_form(s, q, n)),
                                   (seen, interval.expected_overhead_closed_form(s, q, n))):
                    sd = sim.std(ddof=1)
                    if sd == 0:
                        z = 0.0 if math.isclose(sim.mean(), exact) else math.inf
                    else:
                        z = abs(sim.mean() - exact) / (sd / math.sqrt(cfg.trials))
                    worst = max(worst, z)
    return CheckResult("mean gap and overhead closed forms", worst <= cfg.sigmas,
                       f"max |z| {worst:.2f} (limit {cfg.sigmas:g})")


def check_threshold_region(cfg: Settings) -> CheckResult:
    worst = 0.0
    for j, c in enumerate((0.05, 0.1, 0.3)):
        est, se = skyline.threshold_region_measure_mc(
            skyline.uniform_2d(), c, cfg.mc_samples, cfg.rng(3, j))
        exact = skyline.threshold_region_measure(skyline.uniform_2d(), c)
        worst = max(worst, abs(est - exact) / se)
    return CheckResult("threshold region measure", worst <= cfg.sigmas,
                       f"max |z| {worst:.2f} (limit {cfg.sigmas:g})")


def check_tree_oracle(cfg: Settings, instances: int = 500) -> CheckResult:
    rng = cfg.rng(4)
    bad = 0
    for i in range(instances):
        p = (0.3, 0.5, 0.7)[i % 3]
        m = int(rng.integers(1, 13))
        n = int(rng.integers(1, min(m, 6) + 1))
        cands = tree.sample_tree_nodes(p, rng, m)
        if tree.offline_optimal_coverage(cands, n) != tree.brute_force_optimal_coverage(cands, n):
            bad += 1
    return CheckResult("tree offline oracle vs brute force", bad == 0,
                       f"{bad} mismatches in {instances}")


def check_skyline_oracle(cfg: Settings, instances: int = 500) -> CheckResult:
    rng = cfg.rng(5)
    worst = 0.0
    for _ in range(instances):
        m = int(rng.integers(1, 13))
        n = int(rng.integers(1, 6))
        pts = rng.random((m, 2))
        fast = skyline.offline_optimal_gap_2d(pts, n)
        slow = skyline.brute_force_optimal_gap_2d(pts, n)
        worst = max(worst, abs(fast - slow))
    return CheckResult("skyline offline oracle vs brute force", worst <= 1e-12,
                       f"max abs diff {worst:.1e}")


CHECKS: list[Callable[[Settings], CheckResult]] = [
    check_gamma_identity,
    check_order_statistics,
    check_gap_and_overhead,
    check_threshold_region,
    check_tree_oracle,
    check_skyline_oracle,
]


def run_checks(fast: bool = False, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    cfg = Settings.default(fast)
    out = []
    for check in CHECKS:
        try:
            res = check(cfg)
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(check.__name__, False, f"raised {exc!r}")
        out.append(res)
        if echo:
            echo(res.line())
    return out
