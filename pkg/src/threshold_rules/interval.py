"""Unit-interval model: power-law qualities and threshold selection on the gap.

A sample's quality ``x`` lies in [0, 1]; its complement gap ``1 - x`` has
c.d.f. ``x**k``.  The threshold rule accepts ``x`` as the i-th selection iff
``1 - x <= c_i``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .schedule import ThresholdSchedule, power_decay, threshold_at, thresholds


@dataclass(frozen=True)
class PowerLawQuality:
    """Quality distribution whose complement gap has c.d.f. ``x**k`` on [0, 1]."""

    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"power-law shape k must be positive, got {self.k}")

    def sample_gaps(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.random(size) ** (1.0 / self.k)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return 1.0 - self.sample_gaps(rng, size)


@dataclass
class IntervalTrace:
    qualities: np.ndarray
    rejected: np.ndarray
    seen_total: int
    wait_times: np.ndarray

    @property
    def n(self) -> int:
        return len(self.qualities)

    def rejected_before(self, i: int) -> np.ndarray:
        """Samples rejected before the ``i``-th selection (rejections are stored in order)."""
        return self.rejected[: int(np.sum(self.wait_times[:i] - 1))]

    def head(self, n: int) -> "IntervalTrace":
        w = self.wait_times[:n]
        return IntervalTrace(self.qualities[:n], self.rejected_before(n), int(w.sum()), w)


def complement_mean(k: float) -> float:
    """Mean of the complement gap: the integral of x * k x^(k-1) over [0, 1]."""
    return k / (k + 1.0)


def run_interval_selection(s: ThresholdSchedule, q: PowerLawQuality, n: int,
                           rng: np.random.Generator, method: str = "skip") -> IntervalTrace:
    """Run the threshold rule until ``n`` samples are selected.

    ``method="stream"`` draws qualities one at a time and tests each against
    the current threshold.  ``method="skip"`` (default) produces the same
    distribution in O(n) vectorised work: the wait for selection i is
    geometric with success probability ``c_i**k``, rejected gaps are drawn
    from the law conditioned on ``gap > c_i`` and the accepted gap from the
    law conditioned on ``gap <= c_i``, both by inverse transform.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if s.is_integer:
        raise ValueError("interval selection needs a real-valued schedule")
    if method == "stream":
        return _run_stream(s, q, n, rng)
    if method != "skip":
        raise ValueError(f"unknown method {method!r}")

    c = thresholds(s, n)
    inv_k = 1.0 / q.k
    p = c ** q.k
    waits = rng.geometric(p).astype(np.int64)
    accepted_gaps = c * rng.random(n) ** inv_k
    reps = waits - 1
    cp = np.repeat(p, reps)
    rejected_gaps = (cp + rng.random(cp.size) * (1.0 - cp)) ** inv_k
    return IntervalTrace(1.0 - accepted_gaps, 1.0 - rejected_gaps,
                         int(waits.sum()), waits)


def simulate_gap_and_overhead(s: ThresholdSchedule, q: PowerLawQuality, n: int,
                              trials: int, rng: np.random.Generator,
                              batch: int = 8192) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial mean gap and T_n for ``trials`` independent runs.

    Same construction as the skip method but without materialising rejected
    samples, vectorised across trials.
    """
    c = thresholds(s, n)
    p = c ** q.k
    gaps = np.empty(trials)
    seen = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, batch):
        b = min(batch, trials - start)
        waits = rng.geometric(p, size=(b, n))
        acc = c * rng.random((b, n)) ** (1.0 / q.k)
        gaps[start:start + b] = acc.mean(axis=1)
        seen[start:start + b] = waits.sum(axis=1)
    return gaps, seen


def _run_stream(s: ThresholdSchedule, q: PowerLawQuality, n: int,
                rng: np.random.Generator, chunk: int = 4096) -> IntervalTrace:
    selected: list[float] = []
    rejected: list[float] = []
    waits: list[int] = []
    i, wait = 1, 0
    c = threshold_at(s, 1)
    while len(selected) < n:
        for x in q.sample(rng, chunk).tolist():
            wait += 1
            if 1.0 - x <= c:
                selected.append(x)
                waits.append(wait)
                wait = 0
                if len(selected) == n:
                    break
                i += 1
                c = threshold_at(s, i)
            else:
                rejected.append(x)
    w = np.array(waits, dtype=np.int64)
    return IntervalTrace(np.array(selected), np.array(rejected), int(w.sum()), w)


def mean_gap(trace: IntervalTrace | Sequence[float]) -> float:
    qualities = trace.qualities if isinstance(trace, IntervalTrace) else np.asarray(trace)
    if len(qualities) == 0:
        raise ValueError("mean gap of an empty selection is undefined")
    return 1.0 - math.fsum(np.asarray(qualities, dtype=float).tolist()) / len(qualities)


def expected_gap_closed_form(s: ThresholdSchedule, q: PowerLawQuality, n: int) -> float:
    """Expected mean gap of the first ``n`` selections: E[gap] / n * sum(c_i)."""
    c = thresholds(s, n)
    return complement_mean(q.k) / n * math.fsum(c.tolist())


def expected_overhead_closed_form(s: ThresholdSchedule, q: PowerLawQuality, n: int) -> float:
    """Expected number of samples seen until the n-th selection, sum of c_i^-k."""
    c = thresholds(s, n)
    return math.fsum((c ** -q.k).tolist())


def order_statistic_expectation(k: float, t: int, m: int) -> float:
    """Mean of the m-th smallest of ``t`` draws from the c.d.f. ``x**k``."""
    if not 1 <= m <= t:
        raise ValueError(f"need 1 <= m <= t, got m={m}, t={t}")
    a = 1.0 / k
    return math.exp(math.lgamma(t + 1) + math.lgamma(m + a)
                    - math.lgamma(t + 1 + a) - math.lgamma(m))


def gamma_sum_identity(k: float, n: int) -> tuple[float, float]:
    """Both sides of sum_{m<=n} G(m+1/k)/G(m) = n G(n+1+1/k) / ((1+1/k) G(n+1))."""
    a = 1.0 / k
    lhs = math.fsum(math.exp(math.lgamma(m + a) - math.lgamma(m)) for m in range(1, n + 1))
    rhs = n * math.exp(math.lgamma(n + 1 + a) - math.lgamma(n + 1)) / (1.0 + a)
    return lhs, rhs


def optimal_mean_gap_closed_form(k: float, n: int, t: float) -> float:
    """Asymptotic mean gap of the best ``n`` of ``t`` samples."""
    if t < n or n < 1:
        raise ValueError(f"need t >= n >= 1, got n={n}, t={t}")
    return (n / (t + 1.0)) ** (1.0 / k) / (1.0 + 1.0 / k)


def optimal_mean_gap_exact(k: float, n: int, t: int) -> float:
    """Exact mean gap of the best ``n`` of ``t`` samples (Gamma-ratio form)."""
    if t < n or n < 1:
        raise ValueError(f"need t >= n >= 1, got n={n}, t={t}")
    a = 1.0 / k
    return math.exp(math.lgamma(t + 1) - math.lgamma(t + 1 + a)
                    + math.lgamma(n + 1 + a) - math.lgamma(n + 1)) / (1.0 + a)


def euler_maclaurin_bound(k: float, alpha: float, n: int) -> float:
    """Upper bound (1/(1-alpha)) (n / E[T_n])^(1/k) on the expected mean gap."""
    overhead = expected_overhead_closed_form(power_decay(alpha), PowerLawQuality(k), n)
    return (n / overhead) ** (1.0 / k) / (1.0 - alpha)


def offline_best_n_gap(samples: Sequence[float], n: int) -> float:
    x = np.asarray(samples, dtype=float)
    if n < 1 or len(x) < n:
        raise ValueError(f"need at least n={n} samples, got {len(x)}")
    top = np.partition(x, len(x) - n)[len(x) - n:]
    return 1.0 - math.fsum(top.tolist()) / n


def run_adaptive_baseline(mode: str, q: PowerLawQuality | None, n: int,
                          rng: np.random.Generator | None = None,
                          stream: Iterable[float] | None = None,
                          chunk: int = 4096) -> IntervalTrace:
    """Select-above-the-mean / select-above-the-median baselines.

    The first sample is always accepted; afterwards a sample is accepted iff
    its quality strictly exceeds the mean (resp. median) of those accepted so
    far.  Qualities come from ``stream`` if given, else from ``q`` and ``rng``.
    """
    if mode not in ("above-mean", "above-median"):
        raise ValueError(f"unknown baseline mode {mode!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if stream is None:
        if q is None or rng is None:
            raise ValueError("need a quality law and rng when no stream is given")
        source = _draws(q, rng, chunk)
    else:
        source = iter(stream)

    selected: list[float] = []
    ordered: list[float] = []
    rejected: list[float] = []
    waits: list[int] = []
    total = 0.0
    wait = 0
    for x in source:
        wait += 1
        if not selected:
            accept = True
        elif mode == "above-mean":
            accept = x > total / len(selected)
        else:
            accept = x > _median(ordered)
        if accept:
            selected.append(x)
            bisect.insort(ordered, x)
            total += x
            waits.append(wait)
            wait = 0
            if len(selected) == n:
                break
        else:
            rejected.append(x)
    if len(selected) < n:
        raise ValueError(f"stream exhausted after {len(selected)} of {n} selections")
    w = np.array(waits, dtype=np.int64)
    return IntervalTrace(np.array(selected), np.array(rejected), int(w.sum()), w)


def _draws(q: PowerLawQuality, rng: np.random.Generator, chunk: int):
    while True:
        yield from q.sample(rng, chunk).tolist()


def _median(ordered: list[float]) -> float:
    m = len(ordered)
    mid = m // 2
    return ordered[mid] if m % 2 else 0.5 * (ordered[mid - 1] + ordered[mid])
