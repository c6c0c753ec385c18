import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from iqnet.dynamics import Box, DynamicsConfig, InitialCondition, Torus
from iqnet.errors import InsufficientBatchesError, NotConvergedError
from iqnet.interference import ones, second_moment_bound
from iqnet.stationary import batch_estimate, ergodic_estimates, loynes_sample, rate_balance_check

W3 = ones(3)


@pytest.fixture(scope="module")
def moderate():
    cfg = DynamicsConfig(W3, 0.25, Torus(20))
    return ergodic_estimates(cfg, seeds=[1, 2], burn_in=2000, horizon=20_000, lags=range(4))


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=60))
def test_batch_estimate_matches_t_interval(xs):
    xs = np.array(xs)
    est = batch_estimate(xs)
    assert est.value == pytest.approx(xs.mean(), abs=1e-9)
    if xs.std() > 0:
        lo, hi = stats.t.interval(0.95, xs.size - 1, loc=xs.mean(), scale=stats.sem(xs))
        assert est.interval == pytest.approx((lo, hi), rel=1e-9, abs=1e-9)


def test_batch_estimate_needs_two():
    with pytest.raises(InsufficientBatchesError):
        batch_estimate([1.0])


def test_too_few_batches():
    cfg = DynamicsConfig(W3, 0.25, Torus(5))
    with pytest.raises(InsufficientBatchesError):
        ergodic_estimates(cfg, [0], 10, 100, batches=5)


def test_needs_torus():
    with pytest.raises(ValueError):
        ergodic_estimates(DynamicsConfig(W3, 0.25, Box(5)), [0], 10, 100)


def test_mean_near_closed_form(moderate):
    assert moderate.closed_form_mean == pytest.approx(1.0)
    assert moderate.mean.contains(1.0, widths=3)
    assert abs(moderate.mean.value - 1.0) < 0.05


def test_departure_rate_matches_arrival_rate(moderate):
    b = moderate.balance
    assert abs(b.departure_rate_origin.value - 0.25) < 0.02 * 0.25 * 3
    assert abs(b.mean_R0.value - 0.25) < 0.02 * 0.25 * 3


def test_residuals_within_three_half_widths(moderate):
    b = moderate.balance
    assert b.drift_residual.contains(0.0, widths=3)
    assert b.mass_transport_residual.contains(0.0, widths=3)


def test_second_moment_below_bound(moderate):
    bound = second_moment_bound(W3, 0.25).bound
    assert moderate.second_moment.value - 3 * moderate.second_moment.half_width <= bound


def test_covariances_positive(moderate):
    assert [c.lag for c in moderate.covariance] == [0, 1, 2, 3]
    assert all(c.estimate > -3 * c.half_width for c in moderate.covariance)
    assert moderate.covariance[0].estimate > moderate.covariance[3].estimate


def test_report_serializes(moderate):
    data = json.loads(moderate.to_json())
    assert data["lam"] == 0.25
    assert moderate.covariance_csv().splitlines()[0].startswith("lag,")


def test_zero_rate_all_zero():
    cfg = DynamicsConfig(W3, 0.0, Torus(5))
    rep = ergodic_estimates(cfg, [0], 10, 300, lags=range(3))
    assert rep.mean.value == 0.0
    assert all(c.estimate == 0.0 for c in rep.covariance)


def test_rate_balance_check_fragment():
    cfg = DynamicsConfig(W3, 0.2, Torus(8))
    b = rate_balance_check(cfg, [3], 500, 6000)
    assert b.departure_rate_origin.value == pytest.approx(0.2, rel=0.2)


def test_k_shift_floor_in_estimates():
    cfg = DynamicsConfig(W3, 0.25, Torus(8), K=2)
    rep = ergodic_estimates(cfg, [0], 500, 3000, initial=InitialCondition.constant(2), lags=[0])
    assert rep.floor_violations == 0 and rep.min_count >= 2


def test_loynes_zero_rate():
    s = loynes_sample(DynamicsConfig(W3, 0.0, Torus(5)), [0, 3], 1.0, 6, seed=0)
    assert s.all_converged
    assert s.converged_depth == [1.0, 1.0]
    assert s.final.tolist() == [0, 0]


def test_loynes_monotone_and_converges():
    cfg = DynamicsConfig(W3, 0.25, Torus(20))
    for seed in range(5):
        s = loynes_sample(cfg, [(i,) for i in range(-3, 4)], 1.0, 11, seed)
        assert s.monotone()
        assert s.all_converged


def test_loynes_box_monotone_in_radius():
    for seed in range(5):
        finals = [loynes_sample(DynamicsConfig(W3, 0.25, Box(n)), [0], 1.0, 11, seed).final[0]
                  for n in (10, 20, 40)]
        assert finals == sorted(finals)


def test_loynes_supercritical_not_converged():
    # shallow starts often sit at 0 for a few doublings, so begin at depth 16
    cfg = DynamicsConfig(W3, 0.5, Torus(10))
    growing = 0
    for seed in range(10):
        try:
            loynes_sample(cfg, [0], 16.0, 5, seed, require_convergence=True)
        except NotConvergedError as exc:
            growing += exc.details["sample"].values[-1, 0] > exc.details["sample"].values[0, 0]
    assert growing >= 8
