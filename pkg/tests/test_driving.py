import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from iqnet.driving import ARRIVAL, DEPARTURE, DrivingStream, count_statistics, poisson_inverse
from iqnet.errors import EmptyWindowError


def as_tuples(events):
    return [tuple(ev) for ev in events]


def poisson_band(mean, sigmas=4.0):
    half = sigmas * math.sqrt(mean)
    return mean - half, mean + half


@given(st.integers(0, 2**40), st.integers(-50, 50), st.integers(-1000, 1000))
@settings(max_examples=40)
def test_block_is_sorted_and_in_range(seed, site, m):
    b = DrivingStream(seed, 0.7, 0.5).block(site, m)
    for times in (b.arrivals, b.departures):
        assert np.all(np.diff(times) > 0)
        assert np.all((times >= m * 0.5) & (times < (m + 1) * 0.5))
    assert b.departures.size == b.mark_bits.size
    assert np.all((b.marks >= 0) & (b.marks < 1))


def test_block_regeneration_is_identical():
    a = DrivingStream(11, 0.25).block((3,), 7)
    b = DrivingStream(11, 0.25).block((3,), 7)
    for x, y in zip((a.arrivals, a.departures, a.mark_bits), (b.arrivals, b.departures, b.mark_bits)):
        assert np.array_equal(x, y)


def test_zero_rate_has_only_departures():
    ev = DrivingStream(4, 0.0).events_in(range(-5, 6), -20.0, 20.0)
    assert len(ev) > 0
    assert set(ev.kind.tolist()) == {DEPARTURE}


def test_query_twice_identical():
    sites = [-2, 0, 5]
    s1, s2 = DrivingStream(9, 0.3), DrivingStream(9, 0.3)
    assert as_tuples(s1.events_in(sites, -7.5, 3.25)) == as_tuples(s2.events_in(sites, -7.5, 3.25))


@given(st.integers(0, 1000), st.floats(0.5, 20), st.floats(0.1, 3))
@settings(max_examples=30)
def test_window_restriction(seed, T, blen):
    stream = DrivingStream(seed, 0.4, blen)
    sites = [(-1,), (0,), (2,)]
    deep = [e for e in stream.events_in(sites, -2 * T, 0.0) if e.time >= -T]
    assert as_tuples(deep) == as_tuples(DrivingStream(seed, 0.4, blen).events_in(sites, -T, 0.0))


def test_events_ordering_and_marks():
    ev = list(DrivingStream(2, 0.5).events_in([(0, 0), (1, -1), (-3, 2)], 0.0, 30.0))
    keys = [(e.time, e.site, e.kind) for e in ev]
    assert keys == sorted(keys)
    for e in ev:
        assert (e.mark is None) == (e.kind == ARRIVAL)


def test_empty_window():
    with pytest.raises(EmptyWindowError) as exc:
        DrivingStream(0, 0.2).events_in([0], 1.0, 1.0)
    assert exc.value.code == "EMPTY_WINDOW"


def test_has_event_agrees_with_events_in():
    stream = DrivingStream(5, 0.1)
    for k in range(200):
        t0 = -5.0 + 0.037 * k
        t1 = t0 + 0.05
        assert stream.has_event((k % 7,), t0, t1) == (len(stream.events_in([(k % 7,)], t0, t1)) > 0)


def test_count_bands():
    c = count_statistics(DrivingStream(0, 0.25), 0, 1e5)
    lo, hi = poisson_band(0.25 * 1e5)
    assert lo <= c.arrivals <= hi
    lo, hi = poisson_band(1e5)
    assert lo <= c.departures <= hi


def test_zero_rate_counts():
    assert count_statistics(DrivingStream(3, 0.0), (1,), 500.0).arrivals == 0


def test_count_statistics_matches_events():
    stream = DrivingStream(8, 0.6)
    ev = stream.events_in([4], 0.0, 37.5)
    c = count_statistics(stream, 4, 37.5)
    assert c.arrivals == int(np.sum(ev.kind == ARRIVAL))
    assert c.departures == int(np.sum(ev.kind == DEPARTURE))


@given(st.floats(0, 1, exclude_max=True), st.floats(0.01, 30))
def test_poisson_inverse_matches_scipy(u, mean):
    k = poisson_inverse(u, mean, math.exp(-mean))
    # scipy's ppf is the smallest k with cdf >= u; ours uses strict >
    assert stats.poisson.cdf(k, mean) >= u - 1e-12
    assert k == 0 or stats.poisson.cdf(k - 1, mean) <= u + 1e-12


def test_block_counts_chi_square():
    lam = 0.25
    stream = DrivingStream(21, lam)
    counts = np.array([stream.block(0, m).arrivals.size for m in range(10_000)])
    kmax = 4
    observed = np.array([np.sum(counts == k) for k in range(kmax)] + [np.sum(counts >= kmax)])
    probs = np.append(stats.poisson.pmf(np.arange(kmax), lam), stats.poisson.sf(kmax - 1, lam))
    expected = probs * counts.size
    # merge thin cells so every expected count is at least 5
    while expected[-1] < 5:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected, observed = expected[:-1], observed[:-1]
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_marks_uniform_ks():
    marks = DrivingStream(33, 0.25).events_in(range(-50, 50), 0.0, 1100.0)
    u = marks.marks[marks.kind == DEPARTURE][:100_000]
    assert u.size == 100_000
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_epochs_uniform_within_block():
    stream = DrivingStream(17, 1.0)
    pos = np.concatenate([stream.block(2, m).arrivals - m for m in range(5000)])
    assert stats.kstest(pos, "uniform").pvalue > 1e-3
