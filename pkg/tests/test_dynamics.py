from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqnet.driving import ARRIVAL, DEPARTURE, DrivingStream, Event
from iqnet.dynamics import (
    INFINITE,
    Box,
    DynamicsConfig,
    InitialCondition,
    Probes,
    Restricted,
    Torus,
    apply_event,
    coupled_run,
    departure_probability,
    initial_state,
    reference_run,
    run,
)
from iqnet.errors import (
    ClockRegressionError,
    FrozenSiteError,
    OrderingViolationError,
    TorusTooSmallError,
)
from iqnet.interference import geometric, ones, truncate, validate

W3 = ones(3)


def state_of(cfg, values, clock=0.0):
    return initial_state(cfg, InitialCondition.explicit(values), clock)


# departure probability


def test_probability_all_zero():
    cfg = DynamicsConfig(W3, 0.2, Box(3))
    assert departure_probability(state_of(cfg, {}), cfg, 0) == 0.0


def test_probability_isolated():
    cfg = DynamicsConfig(W3, 0.2, Box(3))
    assert departure_probability(state_of(cfg, {0: 5}), cfg, 0) == 1.0


def test_probability_three_sites():
    cfg = DynamicsConfig(W3, 0.2, Box(3))
    st_ = state_of(cfg, {-1: 2, 0: 3, 1: 4})
    assert departure_probability(st_, cfg, 0) == pytest.approx(1 / 3)


def test_probability_infinite_neighbor_and_frozen():
    cfg = DynamicsConfig(W3, 0.2, Box(3), frozen={1: INFINITE})
    st_ = state_of(cfg, {0: 7})
    assert departure_probability(st_, cfg, 0) == 0.0
    with pytest.raises(FrozenSiteError):
        departure_probability(st_, cfg, 1)


def test_probability_torus_wraps():
    cfg = DynamicsConfig(W3, 0.2, Torus(2))
    st_ = state_of(cfg, {2: 1, -2: 3})
    assert departure_probability(st_, cfg, 2) == pytest.approx(1 / 4)


def test_torus_too_small():
    with pytest.raises(TorusTooSmallError):
        DynamicsConfig(ones(5), 0.1, Torus(1))


# single events


def test_arrival_at_frozen_site_only_moves_clock():
    cfg = DynamicsConfig(W3, 0.2, Box(2), frozen={1: 4})
    before = state_of(cfg, {0: 1})
    after = apply_event(before, cfg, Event(3.0, (1,), ARRIVAL, None))
    assert after.as_dict() == before.as_dict()
    assert after.clock == 3.0


def test_mark_one_blocked_mark_zero_accepted():
    cfg = DynamicsConfig(W3, 0.2, Box(2))
    st_ = state_of(cfg, {0: 1, 1: 2})
    assert apply_event(st_, cfg, Event(1.0, (0,), DEPARTURE, 1.0))[0] == 1
    assert apply_event(st_, cfg, Event(1.0, (0,), DEPARTURE, 0.0))[0] == 0


def test_clock_regression():
    cfg = DynamicsConfig(W3, 0.2, Box(2))
    with pytest.raises(ClockRegressionError):
        apply_event(state_of(cfg, {}, clock=5.0), cfg, Event(4.0, (0,), ARRIVAL, None))


def test_suppressed_arrival_ignored():
    cfg = DynamicsConfig(W3, 0.2, Box(2), suppressed=frozenset({(0,)}), suppression_window=(0.0, 1.0))
    st_ = state_of(cfg, {})
    assert apply_event(st_, cfg, Event(0.5, (0,), ARRIVAL, None))[0] == 0
    assert apply_event(st_, cfg, Event(1.5, (0,), ARRIVAL, None))[0] == 1


# runs


def test_zero_rate_from_zero_stays_zero():
    cfg = DynamicsConfig(W3, 0.0, Torus(10))
    res = run(cfg, InitialCondition.zero(), DrivingStream(1, 0.0), 0.0, 100.0)
    assert res.state.total() == 0


@pytest.mark.parametrize("mode", [Torus(4), Box(4)])
@pytest.mark.parametrize("seq", [W3, geometric(Fraction(1, 2), 2), validate({-1: 0.7, 0: 1.3, 1: 0.7})])
def test_kernel_matches_reference(mode, seq):
    cfg = DynamicsConfig(seq, 0.3, mode)
    init = InitialCondition.explicit({-2: 3, 0: 1, 3: 2})
    for seed in range(3):
        fast = run(cfg, init, DrivingStream(seed, 0.3), -4.0, 40.0).state
        slow = reference_run(cfg, init, DrivingStream(seed, 0.3), -4.0, 40.0)
        assert fast.as_dict() == slow.as_dict()


def test_kernel_matches_reference_2d_and_k_shift():
    seq = validate({(0, 0): 2, (1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1}, d=2)
    cfg = DynamicsConfig(seq, 0.15, Torus(2), K=1)
    init = InitialCondition.constant(2)
    fast = run(cfg, init, DrivingStream(4, 0.15), 0.0, 30.0).state
    slow = reference_run(cfg, init, DrivingStream(4, 0.15), 0.0, 30.0)
    assert fast.as_dict() == slow.as_dict()


def test_mm1_mean():
    lam = 0.5
    cfg = DynamicsConfig(validate({0: 1}), lam, Restricted.of([0]))
    times = np.arange(1000.0, 200_000.0, 1.0)
    res = run(cfg, InitialCondition.zero(), DrivingStream(6, lam), 0.0, 200_000.0, Probes(times, [0]))
    samples = res.probes.counts[:, 0]
    # batch-means band on the M/M/1 mean lam/(1-lam) = 1
    batches = samples.reshape(50, -1).mean(axis=1)
    half = 3 * batches.std(ddof=1) / np.sqrt(batches.size)
    assert abs(batches.mean() - lam / (1 - lam)) < half


def test_k_floor_on_probes():
    cfg = DynamicsConfig(W3, 0.25, Torus(8), K=3)
    times = np.linspace(0.5, 500.0, 400)
    res = run(cfg, InitialCondition.constant(3), DrivingStream(2, 0.25), 0.0, 500.0,
              Probes(times, [(i,) for i in range(-8, 9)]))
    assert res.probes.counts.min() >= 3


def test_conservation_ledger():
    cfg = DynamicsConfig(W3, 0.3, Box(6))
    init = InitialCondition.sparse([0, 2], [4, 1])
    res = run(cfg, init, DrivingStream(12, 0.3), 0.0, 300.0)
    start = np.array([init.value_at(s) for s in cfg.index_sites()])
    assert np.array_equal(res.state.counts, start + res.arrivals - res.departures)


def test_infinite_neighbor_blocks_departures():
    cfg = DynamicsConfig(W3, 0.4, Box(1), frozen={1: INFINITE})
    res = run(cfg, InitialCondition.zero(), DrivingStream(3, 0.4), 0.0, 200.0)
    assert res.departures[cfg.index_sites().index((0,))] == 0
    assert res.state[(1,)] is INFINITE


# couplings


def test_zero_below_constant():
    cfg = DynamicsConfig(W3, 0.25, Torus(10))
    res = coupled_run([(cfg, InitialCondition.zero()), (cfg, InitialCondition.constant(5))],
                      DrivingStream(0, 0.25), 0.0, 500.0, orderings=[(0, 1)])
    assert res.report.ok and res.report.events_checked > 1000


def test_box_below_torus():
    lam = 0.3
    box, torus = DynamicsConfig(W3, lam, Box(10)), DynamicsConfig(W3, lam, Torus(10))
    res = coupled_run([(box, InitialCondition.zero()), (torus, InitialCondition.zero())],
                      DrivingStream(7, lam), 0.0, 500.0, orderings=[(0, 1)])
    assert res.report.ok


def test_suppressed_below_free():
    lam = 0.3
    free = DynamicsConfig(W3, lam, Torus(10))
    supp = DynamicsConfig(W3, lam, Torus(10), suppressed=frozenset((i,) for i in range(-3, 4)),
                          suppression_window=(50.0, 150.0))
    res = coupled_run([(supp, InitialCondition.zero()), (free, InitialCondition.zero())],
                      DrivingStream(5, lam), 0.0, 300.0, orderings=[(0, 1)])
    assert res.report.ok


def test_violation_detected():
    cfg = DynamicsConfig(W3, 0.25, Torus(5))
    systems = [(cfg, InitialCondition.constant(3)), (cfg, InitialCondition.zero())]
    res = coupled_run(systems, DrivingStream(0, 0.25), 0.0, 10.0, orderings=[(0, 1)], strict=False)
    assert not res.report.ok
    with pytest.raises(OrderingViolationError) as exc:
        coupled_run(systems, DrivingStream(0, 0.25), 0.0, 10.0, orderings=[(0, 1)])
    assert exc.value.trace["pair"] == [0, 1]


@given(st.integers(0, 2**32), st.lists(st.integers(0, 6), min_size=13, max_size=13),
       st.lists(st.integers(0, 3), min_size=13, max_size=13), st.sampled_from([0, 1]))
@settings(max_examples=25)
def test_ordered_initials_stay_ordered(seed, low, extra, K):
    lam = 0.3
    cfg = DynamicsConfig(W3, lam, Torus(6), K=K)
    lo = {i - 6: v for i, v in enumerate(low)}
    hi = {i - 6: v + e for i, (v, e) in enumerate(zip(low, extra))}
    res = coupled_run([(cfg, InitialCondition.explicit(lo)), (cfg, InitialCondition.explicit(hi))],
                      DrivingStream(seed, lam), 0.0, 800.0, orderings=[(0, 1)], strict=False)
    assert res.report.events_checked >= 10_000
    assert res.report.ok


@given(st.integers(0, 2**32))
@settings(max_examples=10)
def test_k_floor_property(seed):
    cfg = DynamicsConfig(W3, 0.3, Torus(5), K=2)
    res = coupled_run([(cfg, InitialCondition.constant(2))], DrivingStream(seed, 0.3), 0.0, 200.0,
                      trace_site=0)
    assert res.traces.min() >= 2


def test_truncations_agree_on_short_paths():
    seq = geometric(Fraction(1, 2), 16)
    agree = 0
    for seed in range(20):
        paths = []
        for R in (8, 16):
            cfg = DynamicsConfig(truncate(seq, R), 0.25, Box(40))
            paths.append(coupled_run([(cfg, InitialCondition.zero())], DrivingStream(seed, 0.25),
                                     0.0, 10.0, trace_site=0).traces[0])
        agree += np.array_equal(*paths)
    assert agree >= 18
