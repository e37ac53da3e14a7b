"""Trial runner and ratio estimators for the three selection models.

Each trial draws from its own counter-based generator keyed by
``(seed, trial index)``, so a report depends only on the config and never on
how trials are spread over workers.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import stats

from . import interval, skyline, tree
from .schedule import INTEGER, REAL, ThresholdSchedule, build_schedule, threshold_at

MODELS = ("interval", "tree", "skyline")
POOLS = ("adversarial", "exact_n")
DEFAULT_SEED = 20240611
CSV_HEADER = ["model", "n", "trial", "online_quality", "offline_quality", "ratio", "T_n",
              "event_En"]


@dataclass
class ExperimentConfig:
    model: str
    schedule: str | dict
    n: int
    trials: int = 1000
    seed: int = DEFAULT_SEED
    k: float = 1.0
    p: float = 0.5
    space: str = "uniform2d"
    pool: str = "adversarial"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.pool not in POOLS:
            raise ValueError(f"pool must be one of {POOLS}, got {self.pool!r}")
        if self.n < 1 or self.trials < 1:
            raise ValueError("n and trials must be positive")
        if self.model == "interval" and not self.k > 0:
            raise ValueError("k must be positive")
        if self.model == "tree" and not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        self.seed = int(self.seed) & 0xFFFF_FFFF_FFFF_FFFF
        # fail early on an unusable schedule or space
        self.threshold_schedule()
        if self.model == "skyline":
            self.sky_space()

    def threshold_schedule(self) -> ThresholdSchedule:
        return build_schedule(self.schedule, INTEGER if self.model == "tree" else REAL)

    def sky_space(self) -> skyline.SkySpace:
        return skyline.parse_space(self.space)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        if self.model != "interval":
            d.pop("k")
        if self.model != "tree":
            d.pop("p")
        if self.model != "skyline":
            d.pop("space")
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrialResult:
    trial: int
    online: float
    offline: float
    ratio: float
    T_n: int
    event: bool | None = None
    z: int | None = None
    rejected: int = 0


@dataclass
class RatioReport:
    model: str
    n: int
    mean_ratio_of_expectations: float
    ratio_of_expectations_se: float
    mean_expected_ratio: float
    expected_ratio_se: float
    event_rate: float
    trials_run: int
    degenerate_trials: int
    bound: float
    expectation_bound: float
    ratio_bound_estimate: float = math.nan
    per_trial: list[TrialResult] = field(default_factory=list, repr=False)

    def ratios(self) -> np.ndarray:
        r = np.array([t.ratio for t in self.per_trial])
        return r[np.isfinite(r)]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent Philox stream for one trial."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def _interval_trial(cfg: ExperimentConfig, s, rng, idx: int) -> TrialResult:
    n = cfg.n
    q = interval.PowerLawQuality(cfg.k)
    adversarial = cfg.pool == "adversarial"
    tr = interval.run_interval_selection(s, q, n + 1 if adversarial else n, rng)
    online_sel = tr.qualities[:n]
    rejected = tr.rejected if adversarial else tr.rejected_before(n)
    pool = np.concatenate([online_sel, rejected])
    online = interval.mean_gap(online_sel)
    offline = interval.offline_best_n_gap(pool, n)
    ratio = online / offline if offline > 0 else math.nan
    return TrialResult(idx, online, offline, ratio, int(tr.wait_times[:n].sum()),
                       rejected=len(rejected))


def _tree_trial(cfg: ExperimentConfig, s, rng, idx: int) -> TrialResult:
    n = cfg.n
    adversarial = cfg.pool == "adversarial"
    tr = tree.run_tree_selection(s, cfg.p, n + 1 if adversarial else n, rng)
    online_sel = tr.selected[:n]
    rejected = tr.rejected if adversarial else tr.head(n).rejected
    online = tree.coverage(online_sel)
    offline = tree.offline_optimal_coverage(online_sel + rejected, n)
    return TrialResult(idx, float(online), float(offline), offline / online,
                       int(tr.wait_times[:n].sum()), rejected=len(rejected))


def _sky_trial(cfg: ExperimentConfig, s, rng, idx: int) -> TrialResult:
    n = cfg.n
    space = cfg.sky_space()
    adversarial = cfg.pool == "adversarial"
    tr = skyline.run_sky_selection(space, s, n + 1 if adversarial else n, rng)
    head = tr.head(n)
    view = dataclasses.replace(head, rejected=tr.rejected) if adversarial else head
    event = skyline.detect_event_En(view)
    if space.dimension == 2:
        online = skyline.staircase_gap(head.selected, space)
        offline = skyline.offline_optimal_gap_2d(
            np.concatenate([head.selected, view.rejected]), n, space)
        ratio = online / offline if offline > 0 else math.nan
    else:
        online = offline = ratio = math.nan
    return TrialResult(idx, online, offline, ratio, head.seen_total, event,
                       head.in_Xn_count, len(view.rejected))


_TRIAL = {"interval": _interval_trial, "tree": _tree_trial, "skyline": _sky_trial}


def run_trial(cfg: ExperimentConfig, idx: int) -> TrialResult:
    return _TRIAL[cfg.model](cfg, cfg.threshold_schedule(), trial_rng(cfg.seed, idx), idx)


def run_trials(cfg: ExperimentConfig, workers: int = 1) -> list[TrialResult]:
    s = cfg.threshold_schedule()
    fn = _TRIAL[cfg.model]

    def one(idx):
        return fn(cfg, s, trial_rng(cfg.seed, idx), idx)

    if workers <= 1:
        return [one(i) for i in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(cfg.trials), chunksize=max(1, cfg.trials // (4 * workers))))


def _ratio_of_means(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Ratio of sample means and its delta-method standard error."""
    t = len(num)
    a, b = float(np.mean(num)), float(np.mean(den))
    r = a / b
    if t < 2:
        return r, math.nan
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (b * b * t)
    return r, math.sqrt(max(var, 0.0))


def theoretical_bounds(cfg: ExperimentConfig) -> tuple[float, float]:
    """(bound on E[ratio], bound on the ratio of expectations) for the configured rule."""
    s = cfg.threshold_schedule()
    if cfg.model == "interval":
        if s.kind == "power":
            b = 16.0 / (1.0 - s.params[0])
            return b, b
        return math.nan, math.nan
    if cfg.model == "tree":
        if cfg.n < 2:
            return math.nan, math.nan
        return tree.proof_constants(s, cfg.n)
    return math.nan, math.nan


def summarize(cfg: ExperimentConfig, results: Sequence[TrialResult]) -> RatioReport:
    s = cfg.threshold_schedule()
    online = np.array([r.online for r in results])
    offline = np.array([r.offline for r in results])
    ratios = np.array([r.ratio for r in results])
    degenerate = 0
    event_rate = 0.0
    bound_est = math.nan
    if cfg.model == "skyline":
        events = [bool(r.event) for r in results]
        event_rate = sum(events) / len(events)
        bound_est = skyline.ratio_bound_estimate(events, s, cfg.n)

    finite = np.isfinite(ratios)
    if cfg.model == "skyline" and cfg.sky_space().dimension > 2:
        mean_ratio, ratio_se = bound_est, math.nan
        roe, roe_se = math.nan, math.nan
    else:
        degenerate = int(np.count_nonzero(~finite))
        good = ratios[finite]
        mean_ratio = float(np.mean(good)) if good.size else math.nan
        ratio_se = float(np.std(good, ddof=1) / math.sqrt(good.size)) if good.size > 1 else math.nan
        if cfg.model == "tree":
            roe, roe_se = _ratio_of_means(offline, online)
        else:
            roe, roe_se = _ratio_of_means(online, offline)

    if cfg.model == "skyline":
        bound = expectation_bound = bound_est
    else:
        bound, expectation_bound = theoretical_bounds(cfg)
    return RatioReport(cfg.model, cfg.n, roe, roe_se, mean_ratio, ratio_se, event_rate,
                       len(results), degenerate, bound, expectation_bound, bound_est,
                       list(results))


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RatioReport:
    """Run ``cfg.trials`` independent trials and aggregate both ratio metrics."""
    return summarize(cfg, run_trials(cfg, workers))


def confidence_interval(values: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval ``mean +/- z * stderr``."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two values for a confidence interval")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    m = float(np.mean(x))
    half = stats.norm.ppf(0.5 + level / 2.0) * float(np.std(x, ddof=1)) / math.sqrt(x.size)
    return m - half, m + half


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.12g}"


def result_rows(report: RatioReport) -> list[list[str]]:
    return [[report.model, str(report.n), str(r.trial), _fmt(r.online), _fmt(r.offline),
             _fmt(r.ratio), str(r.T_n), _fmt(r.event)] for r in report.per_trial]


def write_results_csv(report: RatioReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(result_rows(report))


def format_summary(cfg: ExperimentConfig, report: RatioReport, level: float = 0.95) -> str:
    s = cfg.threshold_schedule()
    lines = [
        f"model           {cfg.model}",
        f"schedule        {s}",
        f"n               {cfg.n}",
        f"trials          {report.trials_run}",
        f"seed            {cfg.seed}",
        f"offline pool    {cfg.pool}",
    ]
    if cfg.model == "interval":
        lines.append(f"k               {cfg.k:g}")
    elif cfg.model == "tree":
        lines.append(f"p               {cfg.p:g}")
    else:
        lines.append(f"space           {cfg.sky_space()}")
        lines.append(f"c_n             {threshold_at(s, cfg.n):.6g}")

    ratios = report.ratios()
    orient = "Cover*/Cover" if cfg.model == "tree" else "Gap/Gap*"
    if ratios.size >= 2:
        lo, hi = confidence_interval(ratios, level)
        lines.append(f"E[{orient}]    {report.mean_expected_ratio:.6g} "
                     f"(se {report.expected_ratio_se:.3g}, {level:.0%} CI [{lo:.6g}, {hi:.6g}])")
    else:
        lines.append(f"E[{orient}]    {report.mean_expected_ratio:.6g}")
    if math.isfinite(report.mean_ratio_of_expectations):
        z = stats.norm.ppf(0.5 + level / 2.0)
        half = z * report.ratio_of_expectations_se
        lines.append(f"ratio of means  {report.mean_ratio_of_expectations:.6g} "
                     f"(se {report.ratio_of_expectations_se:.3g}, {level:.0%} CI "
                     f"[{report.mean_ratio_of_expectations - half:.6g}, "
                     f"{report.mean_ratio_of_expectations + half:.6g}])")
    if cfg.model == "skyline":
        lines.append(f"event rate      {report.event_rate:.6g}")
        lines.append(f"ratio bound     {report.ratio_bound_estimate:.6g}  (1 + Pr[E_n]/c_n)")
    else:
        lines.append(f"theory bound    {report.bound:.6g}  (on E[{orient}])")
        if report.expectation_bound != report.bound:
            lines.append(f"theory bound    {report.expectation_bound:.6g}  (on ratio of means)")
    if report.degenerate_trials:
        lines.append(f"degenerate      {report.degenerate_trials} trials with zero offline gap")
    mean_T = np.mean([r.T_n for r in report.per_trial])
    lines.append(f"mean T_n        {mean_T:.6g}")
    return "\n".join(lines) + "\n"
