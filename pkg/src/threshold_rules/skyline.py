"""Skyline model on partially ordered product spaces.

Points live in [0, 1]^d with componentwise (weak) dominance.  Every supported
space is a product measure, so each axis is carried to the uniform scale by
its marginal c.d.f.; dominance, upper-set measure and shadow area are all
computed there.  The threshold rule accepts x as the i-th selection iff the
measure of the set of points dominating x is at most c_i.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, stats

from .schedule import ThresholdSchedule, threshold_at, thresholds


class Marginal:
    name = "uniform"

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def __repr__(self) -> str:
        return self.name

    def __eq__(self, other):
        return type(other) is Marginal

    def __hash__(self):
        return hash(Marginal)


@dataclass(frozen=True, repr=False)
class PowerMarginal(Marginal):
    """c.d.f. ``x**a`` on [0, 1]."""

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("power marginal exponent must be positive")

    @property
    def name(self):
        return f"power:{self.a:g}"

    def cdf(self, x):
        return np.asarray(x, dtype=float) ** self.a

    def ppf(self, u):
        return np.asarray(u, dtype=float) ** (1.0 / self.a)


@dataclass(frozen=True, repr=False)
class BetaMarginal(Marginal):
    a: float
    b: float

    @property
    def name(self):
        return f"beta:{self.a:g}:{self.b:g}"

    def cdf(self, x):
        return stats.beta.cdf(x, self.a, self.b)

    def ppf(self, u):
        return stats.beta.ppf(u, self.a, self.b)


def parse_marginal(text: str) -> Marginal:
    head, *args = text.strip().lower().split(":")
    try:
        vals = [float(a) for a in args]
        if head == "uniform" and not vals:
            return Marginal()
        if head == "power" and len(vals) == 1:
            return PowerMarginal(vals[0])
        if head == "beta" and len(vals) == 2:
            return BetaMarginal(*vals)
    except ValueError as exc:
        raise ValueError(f"bad marginal spec {text!r}") from exc
    raise ValueError(f"bad marginal spec {text!r}; use uniform, power:<a> or beta:<a>:<b>")


@dataclass(frozen=True)
class SkySpace:
    """Product measure on [0, 1]^d given by one marginal per axis."""

    marginals: tuple[Marginal, ...]
    label: str = ""

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    @property
    def is_uniform(self) -> bool:
        return all(type(m) is Marginal for m in self.marginals)

    def to_unit(self, points) -> np.ndarray:
        """Map points to the uniform square/cube through the marginal c.d.f.s."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_uniform:
            return x
        return np.column_stack([m.cdf(x[:, j]) for j, m in enumerate(self.marginals)])

    def from_unit(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.is_uniform:
            return u
        return np.column_stack([m.ppf(u[:, j]) for j, m in enumerate(self.marginals)])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.from_unit(rng.random((size, self.dimension)))

    def upper_measure(self, points) -> np.ndarray:
        return np.prod(1.0 - self.to_unit(points), axis=1)

    def __str__(self) -> str:
        if self.label:
            return self.label
        return "product:" + ",".join(map(repr, self.marginals))


def uniform_2d() -> SkySpace:
    return SkySpace((Marginal(), Marginal()), "uniform2d")


def uniform_cube(d: int) -> SkySpace:
    if d < 2:
        raise ValueError(f"cube dimension must be at least 2, got {d}")
    return SkySpace(tuple(Marginal() for _ in range(d)), f"cube:{d}")


def product_2d(mx: Marginal, my: Marginal) -> SkySpace:
    return SkySpace((mx, my), f"product2d:{mx!r},{my!r}")


def parse_space(text: str) -> SkySpace:
    """``uniform2d``, ``cube:<d>`` or ``product2d:<marginal>,<marginal>``."""
    head, _, rest = text.strip().lower().partition(":")
    if head == "uniform2d" and not rest:
        return uniform_2d()
    if head == "cube":
        try:
            return uniform_cube(int(rest))
        except ValueError as exc:
            raise ValueError(f"bad cube dimension in {text!r}") from exc
    if head == "product2d":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ValueError("product2d needs two marginals separated by a comma")
        return product_2d(parse_marginal(parts[0]), parse_marginal(parts[1]))
    raise ValueError(f"unknown space {text!r}")


def upper_measure(space: SkySpace, pt) -> float:
    return float(space.upper_measure(pt)[0])


@dataclass
class SkyTrace:
    selected: np.ndarray
    rejected: np.ndarray
    seen_total: int
    wait_times: np.ndarray
    selected_upper: np.ndarray = field(repr=False)
    thresholds: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.selected)

    @property
    def in_Xn_count(self) -> int:
        """Selected points that would also pass the final threshold c_n."""
        if self.n == 0:
            return 0
        return int(np.sum(self.selected_upper <= self.thresholds[self.n - 1]))

    def head(self, n: int) -> "SkyTrace":
        w = self.wait_times[:n]
        return SkyTrace(self.selected[:n], self.rejected[: int(np.sum(w - 1))], int(w.sum()),
                        w, self.selected_upper[:n], self.thresholds[:n])


def run_sky_selection(space: SkySpace, s: ThresholdSchedule, n: int,
                      rng: np.random.Generator, chunk: int = 256) -> SkyTrace:
    """Stream points from the space; accept x as the i-th pick iff its upper measure <= c_i."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if s.is_integer:
        raise ValueError("skyline selection needs a real-valued schedule")
    c = thresholds(s, n)
    limits = c.tolist()
    d = space.dimension
    selected: list[np.ndarray] = []
    rejected: list[np.ndarray] = []
    waits: list[int] = []
    wait = 0
    while len(selected) < n:
        pts = space.sample(rng, chunk)
        um = space.upper_measure(pts).tolist()
        rejected_mask = np.zeros(chunk, dtype=bool)
        need = limits[len(selected)]
        for j, m in enumerate(um):
            wait += 1
            if m <= need:
                selected.append(pts[j])
                waits.append(wait)
                wait = 0
                if len(selected) == n:
                    break
                need = limits[len(selected)]
            else:
                rejected_mask[j] = True
        rejected.append(pts[rejected_mask])
    sel = np.array(selected).reshape(-1, d)
    w = np.array(waits, dtype=np.int64)
    return SkyTrace(sel, np.concatenate(rejected).reshape(-1, d), int(w.sum()), w,
                    space.upper_measure(sel), c)


def dominates(a, b) -> bool:
    """Weak componentwise dominance ``b <= a``."""
    return bool(np.all(np.asarray(b) <= np.asarray(a)))


def maximal_points(points) -> np.ndarray:
    """Points not dominated by any other point, sorted by first coordinate ascending.

    Duplicates collapse to a single representative.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 2)
    pts = np.atleast_2d(pts)
    if pts.shape[1] == 2:
        order = np.lexsort((-pts[:, 1], -pts[:, 0]))
        keep = []
        best = -math.inf
        for i in order.tolist():
            y = pts[i, 1]
            if y > best:
                keep.append(i)
                best = y
        return pts[keep[::-1]]
    uniq = np.unique(pts, axis=0)
    ge = (uniq[:, None, :] <= uniq[None, :, :]).all(axis=2)
    np.fill_diagonal(ge, False)
    out = uniq[~ge.any(axis=1)]
    return out[np.argsort(out[:, 0], kind="stable")]


def _staircase_area(unit_pts: np.ndarray) -> float:
    m = maximal_points(unit_pts)
    if len(m) == 0:
        return 0.0
    xs = m[:, 0]
    widths = np.diff(xs, prepend=0.0)
    return math.fsum((widths * m[:, 1]).tolist())


def staircase_gap(points, space: SkySpace | None = None) -> float:
    """1 minus the measure of the union of the points' shadows (2D only)."""
    space = space or uniform_2d()
    if space.dimension != 2:
        raise ValueError("staircase_gap is defined for 2D spaces only")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    area = _staircase_area(space.to_unit(pts)) if len(pts) else 0.0
    return min(1.0, max(0.0, 1.0 - area))


def offline_optimal_gap_2d(points, n: int, space: SkySpace | None = None) -> float:
    """Smallest gap achievable with ``n`` of the given points (exact DP)."""
    space = space or uniform_2d()
    if space.dimension != 2:
        raise ValueError("offline_optimal_gap_2d needs a 2D space")
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("need at least one point")
    m = maximal_points(space.to_unit(pts))
    if len(m) <= n:
        return min(1.0, max(0.0, 1.0 - _staircase_area(m)))
    xs = m[:, 0].tolist()
    ys = m[:, 1].tolist()
    k = len(xs)
    # best[i]: largest area of a staircase using j points whose rightmost is point i
    best = [xs[i] * ys[i] for i in range(k)]
    for j in range(2, n + 1):
        nxt = [-math.inf] * k
        for i in range(j - 1, k):
            xi, yi = xs[i], ys[i]
            nxt[i] = max(best[p] + (xi - xs[p]) * yi for p in range(j - 2, i))
        best = nxt
    return min(1.0, max(0.0, 1.0 - max(best)))


def brute_force_optimal_gap_2d(points, n: int, space: SkySpace | None = None,
                               limit: int = 16) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) > limit:
        raise ValueError(f"{len(pts)} points exceeds the brute-force limit of {limit}")
    n = min(n, len(pts))
    return min(staircase_gap(pts[list(sub)], space)
               for sub in itertools.combinations(range(len(pts)), n))


def undominated_rejects(trace: SkyTrace) -> np.ndarray:
    """Boolean mask over rejected points: True where no selected point dominates it."""
    r, s = trace.rejected, trace.selected
    if len(r) == 0:
        return np.zeros(0, dtype=bool)
    if len(s) == 0:
        return np.ones(len(r), dtype=bool)
    covered = np.zeros(len(r), dtype=bool)
    for pt in s:
        covered |= (r <= pt).all(axis=1)
    return ~covered


def detect_event_En(trace: SkyTrace) -> bool:
    """True iff some rejected point escapes the shadow of the selected set."""
    return bool(undominated_rejects(trace).any())


def ratio_bound_estimate(traces: Iterable[SkyTrace] | Sequence[bool], s: ThresholdSchedule,
                         n: int) -> float:
    """1 + Pr[E_n] / c_n, with Pr[E_n] the empirical event frequency.

    Accepts traces or precomputed event indicators.
    """
    events = [e if isinstance(e, (bool, np.bool_)) else detect_event_En(e) for e in traces]
    if not events:
        raise ValueError("need at least one trace")
    return 1.0 + (sum(events) / len(events)) / threshold_at(s, n)


def threshold_region_measure(space: SkySpace, c: float, samples: int = 10**6,
                             rng: np.random.Generator | None = None) -> float:
    """Probability that a fresh point passes threshold ``c``.

    Exact ``c (1 + ln 1/c)`` for 2D product spaces; Monte Carlo otherwise.
    """
    if not 0.0 < c <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    if space.dimension == 2:
        return c * (1.0 + math.log(1.0 / c))
    return threshold_region_measure_mc(space, c, samples, rng)[0]


def threshold_region_measure_mc(space: SkySpace, c: float, samples: int = 10**6,
                                rng: np.random.Generator | None = None,
                                batch: int = 1 << 18) -> tuple[float, float]:
    """(membership frequency, standard error) over ``samples`` fresh points."""
    rng = rng if rng is not None else np.random.default_rng(0)
    hits = 0
    left = samples
    while left:
        b = min(batch, left)
        hits += int(np.count_nonzero(space.upper_measure(space.sample(rng, b)) <= c))
        left -= b
    est = hits / samples
    return est, math.sqrt(est * (1.0 - est) / samples)


def uniform_product_cdf(c: float, d: int) -> float:
    """P[prod of d uniforms <= c] = c * sum_{j<d} ln(1/c)^j / j!."""
    if c >= 1.0:
        return 1.0
    L = math.log(1.0 / c)
    return c * math.fsum(L ** j / math.factorial(j) for j in range(d))


def continuity_witness(space: SkySpace, y, c: float) -> np.ndarray:
    """A point z dominating y with upper measure c, for 0 <= c <= upper_measure(y).

    Shrinks y's complement coordinates (on the uniform scale) by a common
    factor t, found by a one-dimensional root search.
    """
    u = space.to_unit(y)[0]
    w = 1.0 - u
    um = float(np.prod(w))
    if c < 0 or c > um * (1 + 1e-12):
        raise ValueError(f"target {c} outside [0, {um}]")
    if um == 0.0:
        return np.asarray(y, dtype=float).copy()
    if c >= um:
        t = 1.0
    elif c == 0.0:
        t = 0.0
    else:
        t = optimize.brentq(lambda t: t ** len(w) * um - c, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
    z_unit = np.maximum(1.0 - t * w, u)
    z = space.from_unit(z_unit)[0]
    return np.maximum(z, np.asarray(y, dtype=float))


def measure_continuity_probe(space: SkySpace, trials: int, rng: np.random.Generator,
                             tol: float = 1e-9) -> bool:
    """Constructively check measure continuity on ``trials`` random (y, c) pairs."""
    for _ in range(trials):
        y = space.sample(rng, 1)[0]
        um = upper_measure(space, y)
        c = float(rng.uniform(0.0, um)) if um > 0 else 0.0
        try:
            z = continuity_witness(space, y, c)
        except (ValueError, RuntimeError):
            return False
        if not dominates(z, y) or abs(upper_measure(space, z) - c) > tol:
            return False
    return True
