import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from threshold_rules import interval as I
from threshold_rules.schedule import explicit, power_decay, threshold_at


def z_score(samples, expected):
    samples = np.asarray(samples, dtype=float)
    return abs(samples.mean() - expected) / (samples.std(ddof=1) / math.sqrt(samples.size))


@pytest.mark.parametrize("method", ["skip", "stream"])
def test_accept_all_schedule(method, rng):
    for k in (0.5, 1, 3):
        tr = I.run_interval_selection(power_decay(0), I.PowerLawQuality(k), 5, rng, method)
        assert tr.seen_total == 5
        assert tr.wait_times.tolist() == [1] * 5
        assert tr.rejected.size == 0


@pytest.mark.parametrize("method", ["skip", "stream"])
def test_first_selection_immediate(method, rng):
    tr = I.run_interval_selection(power_decay(0.7), I.PowerLawQuality(2), 1, rng, method)
    assert tr.wait_times.tolist() == [1]


@pytest.mark.parametrize("method", ["skip", "stream"])
def test_trace_invariants(method, rng):
    s = power_decay(0.5)
    tr = I.run_interval_selection(s, I.PowerLawQuality(1.5), 200, rng, method)
    assert tr.seen_total == len(tr.qualities) + len(tr.rejected) == tr.wait_times.sum()
    for i, y in enumerate(tr.qualities, start=1):
        assert 1 - y <= threshold_at(s, i)
    # every rejection failed the threshold in force when it was seen
    steps = np.repeat(np.arange(1, 201), tr.wait_times - 1)
    c = np.array([threshold_at(s, i) for i in steps])
    assert np.all(1 - tr.rejected > c - 1e-15)


def test_late_wait_times_match_overhead_summand():
    k, n = 1, 1000
    s = power_decay(0.5)
    tr = I.run_interval_selection(s, I.PowerLawQuality(k), n, np.random.default_rng(7), "stream")
    idx = np.arange(900, 1001)
    p = np.array([threshold_at(s, i) for i in idx]) ** k
    expected = np.mean(1 / p)
    se = math.sqrt(np.sum((1 - p) / p**2)) / idx.size
    assert abs(tr.wait_times[idx - 1].mean() - expected) <= 3 * se


def test_stream_and_skip_agree_in_distribution():
    s, q, n, trials = power_decay(0.5), I.PowerLawQuality(2), 16, 3000
    rng_a, rng_b = np.random.default_rng(11), np.random.default_rng(12)
    stream = [I.run_interval_selection(s, q, n, rng_a, "stream") for _ in range(trials)]
    skip = [I.run_interval_selection(s, q, n, rng_b, "skip") for _ in range(trials)]
    for stat in (lambda t: t.seen_total, I.mean_gap, lambda t: t.rejected.mean()):
        a = [stat(t) for t in stream]
        b = [stat(t) for t in skip]
        assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_batch_simulator_matches_skip_traces():
    s, q, n = power_decay(0.25), I.PowerLawQuality(1), 32
    gaps, seen = I.simulate_gap_and_overhead(s, q, n, 4000, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    traces = [I.run_interval_selection(s, q, n, rng) for _ in range(4000)]
    assert stats.ks_2samp(gaps, [I.mean_gap(t) for t in traces]).pvalue > 1e-3
    assert stats.ks_2samp(seen, [t.seen_total for t in traces]).pvalue > 1e-3


def test_selected_gap_is_scaled_fresh_gap():
    # the i-th selected gap divided by c_i has the unconditional gap law
    k, i, s = 2.5, 4, power_decay(0.6)
    rng = np.random.default_rng(21)
    q = I.PowerLawQuality(k)
    scaled = np.array([1 - I.run_interval_selection(s, q, i, rng, "stream").qualities[-1]
                       for _ in range(10_000)]) / threshold_at(s, i)
    fresh = q.sample_gaps(np.random.default_rng(22), 10_000)
    assert stats.ks_2samp(scaled, fresh).pvalue > 1e-3


def test_mean_gap():
    assert I.mean_gap([1.0, 1.0]) == 0.0
    assert I.mean_gap([0.5]) == 0.5
    assert I.mean_gap([0.2, 0.4, 0.9]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        I.mean_gap([])


def test_closed_form_examples():
    q1 = I.PowerLawQuality(1)
    assert I.expected_gap_closed_form(power_decay(0), q1, 4) == 0.5
    assert I.expected_gap_closed_form(power_decay(0.5), q1, 2) == pytest.approx(
        0.4267766952966369, abs=1e-15)
    assert I.expected_overhead_closed_form(power_decay(0), I.PowerLawQuality(3), 7) == 7
    assert I.expected_overhead_closed_form(power_decay(0.5), I.PowerLawQuality(2), 3) == \
        pytest.approx(6, abs=1e-12)


def test_complement_mean_by_quadrature():
    from scipy.integrate import quad
    for k in (0.5, 1, 2, 7):
        val, _ = quad(lambda x: x * k * x ** (k - 1), 0, 1)
        assert I.complement_mean(k) == pytest.approx(val, rel=1e-10)


@pytest.mark.parametrize("k, alpha, n", [(1, 0.25, 16), (2, 0.5, 16), (4, 0.0, 64)])
def test_closed_forms_against_simulation(k, alpha, n):
    s, q = power_decay(alpha), I.PowerLawQuality(k)
    gaps, seen = I.simulate_gap_and_overhead(s, q, n, 100_000, np.random.default_rng([k, n]))
    assert z_score(gaps, I.expected_gap_closed_form(s, q, n)) <= 3
    if seen.std() > 0:
        assert z_score(seen, I.expected_overhead_closed_form(s, q, n)) <= 3
    else:
        assert seen.mean() == I.expected_overhead_closed_form(s, q, n)


def test_order_statistic_k1_is_uniform_rank():
    assert I.order_statistic_expectation(1, 3, 2) == pytest.approx(0.5, abs=1e-12)
    assert I.order_statistic_expectation(1, 9, 9) == pytest.approx(0.9, abs=1e-12)
    with pytest.raises(ValueError):
        I.order_statistic_expectation(1, 3, 4)


def test_order_statistic_by_quadrature():
    from scipy.integrate import quad
    k, t, m = 2.0, 20, 10
    dens = stats.beta(m, t - m + 1)  # the m-th smallest of t uniforms
    val, _ = quad(lambda u: u ** (1 / k) * dens.pdf(u), 0, 1)
    assert I.order_statistic_expectation(k, t, m) == pytest.approx(val, rel=1e-9)


def test_order_statistic_monte_carlo():
    k, t, m = 2, 20, 10
    draws = np.sort(np.random.default_rng(5).random((100_000, t)) ** (1 / k), axis=1)[:, m - 1]
    assert z_score(draws, I.order_statistic_expectation(k, t, m)) <= 3


def test_order_statistic_no_overflow():
    v = I.order_statistic_expectation(3, 10**6, 5 * 10**5)
    assert 0 < v < 1 and math.isfinite(v)


def test_gamma_sum_identity():
    assert I.gamma_sum_identity(1, 3) == pytest.approx((6, 6), rel=1e-12)
    assert I.gamma_sum_identity(1, 10) == pytest.approx((55, 55), rel=1e-12)
    lhs, rhs = I.gamma_sum_identity(3, 25)
    assert abs(lhs - rhs) / rhs < 1e-9


def test_optimal_mean_gap_examples():
    assert I.optimal_mean_gap_closed_form(1, 1, 1) == 0.25
    assert I.optimal_mean_gap_closed_form(1, 3, 3) == 0.375
    with pytest.raises(ValueError):
        I.optimal_mean_gap_closed_form(1, 5, 4)


def _best_n_mc(k, n, t, trials, seed):
    rng = np.random.default_rng(seed)
    out = np.empty(trials)
    for start in range(0, trials, 10_000):
        g = rng.random((10_000, t)) ** (1 / k)
        out[start:start + 10_000] = np.partition(g, n - 1, axis=1)[:, :n].mean(axis=1)
    return out


def test_exact_best_n_gap_matches_monte_carlo():
    k, n, t = 2, 10, 100
    mc = _best_n_mc(k, n, t, 100_000, 8)
    assert z_score(mc, I.optimal_mean_gap_exact(k, n, t)) <= 3


def test_exact_best_n_gap_is_sum_of_order_statistics():
    k, n, t = 1.7, 12, 40
    direct = sum(I.order_statistic_expectation(k, t, m) for m in range(1, n + 1)) / n
    assert I.optimal_mean_gap_exact(k, n, t) == pytest.approx(direct, rel=1e-12)


def test_asymptotic_best_n_gap_close_for_large_n():
    # n, t large enough that the power form is within 1% of the exact value
    k, n, t = 2, 50, 500
    assert abs(I.optimal_mean_gap_closed_form(k, n, t) / I.optimal_mean_gap_exact(k, n, t) - 1) < 0.01
    mc = _best_n_mc(k, n, t, 100_000, 9)
    se = mc.std(ddof=1) / math.sqrt(mc.size)
    approx = I.optimal_mean_gap_closed_form(k, n, t)
    assert abs(mc.mean() - approx) <= max(0.01 * approx, 3 * se)


@pytest.mark.parametrize("k, alpha, n", [(1, 0.0, 10), (1, 0.5, 100), (2, 0.5, 1000),
                                         (4, 0.25, 64), (0.5, 0.9, 500)])
def test_euler_maclaurin_bound_dominates(k, alpha, n):
    q = I.PowerLawQuality(k)
    assert I.euler_maclaurin_bound(k, alpha, n) >= I.expected_gap_closed_form(power_decay(alpha), q, n)


def test_euler_maclaurin_degenerate():
    assert I.euler_maclaurin_bound(1, 0, 17) == pytest.approx(1.0)


def test_offline_best_n_gap():
    assert I.offline_best_n_gap([0.1, 0.9, 0.5], 2) == pytest.approx(0.3, abs=1e-15)
    assert I.offline_best_n_gap([0.4] * 5, 3) == pytest.approx(0.6, abs=1e-15)
    xs = [0.3, 0.8, 0.1, 0.6]
    assert I.offline_best_n_gap(xs, 4) == I.mean_gap(xs)
    with pytest.raises(ValueError):
        I.offline_best_n_gap([0.5], 2)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.data())
def test_offline_best_beats_every_subset(xs, data):
    n = data.draw(st.integers(1, len(xs)))
    best = I.offline_best_n_gap(xs, n)
    for sub in itertools.combinations(xs, n):
        assert best <= I.mean_gap(sub) + 1e-12


def test_adaptive_baselines_examples():
    tr = I.run_adaptive_baseline("above-mean", None, 2, stream=[0.5, 0.4, 0.6])
    assert tr.qualities.tolist() == [0.5, 0.6]
    assert tr.rejected.tolist() == [0.4]
    assert tr.wait_times.tolist() == [1, 2]
    tr = I.run_adaptive_baseline("above-median", None, 2, stream=[0.5, 0.4, 0.6])
    assert tr.qualities.tolist() == [0.5, 0.6]


def test_adaptive_increasing_stream_accepts_everything():
    xs = np.linspace(0.01, 0.99, 40).tolist()
    for mode in ("above-mean", "above-median"):
        tr = I.run_adaptive_baseline(mode, None, 40, stream=xs)
        assert tr.qualities.tolist() == xs
        assert tr.seen_total == 40


def test_adaptive_median_uses_even_midpoint():
    # accepted {0.2, 0.6}: median 0.4, so 0.45 is accepted and 0.35 is not
    tr = I.run_adaptive_baseline("above-median", None, 3, stream=[0.2, 0.6, 0.35, 0.45])
    assert tr.qualities.tolist() == [0.2, 0.6, 0.45]


def test_adaptive_random_runs(rng):
    for mode in ("above-mean", "above-median"):
        tr = I.run_adaptive_baseline(mode, I.PowerLawQuality(1), 50, rng)
        assert tr.n == 50 and tr.seen_total == tr.wait_times.sum() == 50 + tr.rejected.size
    with pytest.raises(ValueError):
        I.run_adaptive_baseline("above-mean", None, 3, stream=[0.5, 0.4])
    with pytest.raises(ValueError):
        I.run_adaptive_baseline("best", None, 3, stream=[0.5])


def test_head_and_rejected_prefix(rng):
    tr = I.run_interval_selection(power_decay(0.5), I.PowerLawQuality(1), 20, rng, "stream")
    h = tr.head(10)
    assert h.seen_total == h.wait_times.sum() == 10 + h.rejected.size
    assert np.array_equal(h.rejected, tr.rejected[: h.rejected.size])


def test_explicit_schedule_drives_selection(rng):
    s = explicit([1.0, 0.5, 0.25])
    tr = I.run_interval_selection(s, I.PowerLawQuality(1), 6, rng)
    assert np.all(1 - tr.qualities[2:] <= 0.25)
