from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from iqnet.errors import (
    AboveThresholdError,
    AsymmetricError,
    DegenerateError,
    NegativeWeightError,
    NonpositiveCenterError,
    SupercriticalError,
    TorusTooSmallError,
)
from iqnet.interference import (
    closed_form_mean,
    critical_rate,
    geometric,
    is_irreducible,
    k_shifted_mean_bound,
    ones,
    second_moment_bound,
    torus_displacement,
    truncate,
    validate,
)


def c_oracle(a0, off):
    """Positive root of off*c^2 + 2*a0*c - a0 = 0, found numerically."""
    roots = np.roots([off, 2 * a0, -a0])
    return float(max(r.real for r in roots))


# validation


def test_validate_width3():
    seq = validate({-1: 1, 0: 1, 1: 1})
    assert seq.support_radius == 1
    assert seq.total == 3
    assert seq.exact


def test_validate_rejects_asymmetry():
    with pytest.raises(AsymmetricError) as exc:
        validate({0: 1, 1: 1})
    assert exc.value.code == "ASYMMETRIC"


def test_validate_rejects_bad_center_and_negative():
    with pytest.raises(NonpositiveCenterError):
        validate({-1: 1, 1: 1})
    with pytest.raises(NegativeWeightError):
        validate({-1: -1, 0: 1, 1: -1})


def test_validate_drops_zero_weights_and_keeps_floats():
    seq = validate({-2: 0, 0: 1.5, 2: 0})
    assert seq.offsets() == [(0,)]
    assert not seq.exact


def test_irreducibility():
    assert not is_irreducible(validate({-2: 1, 0: 1, 2: 1}))
    assert is_irreducible(ones(3))
    unit2 = validate({(0, 0): 1, (1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1}, d=2)
    assert is_irreducible(unit2)
    diag2 = validate({(0, 0): 1, (1, 1): 1, (-1, -1): 1, (1, -1): 1, (-1, 1): 1}, d=2)
    assert not is_irreducible(diag2)


def test_critical_rate():
    assert critical_rate(ones(3)) == pytest.approx(1 / 3)
    assert critical_rate(ones(7)) == pytest.approx(1 / 7)
    assert critical_rate(validate({0: 2})) == pytest.approx(1 / 2)


# closed forms


def test_closed_form_mean_examples():
    assert closed_form_mean(ones(7), 0.1419) == pytest.approx(21.18, abs=0.01)
    assert closed_form_mean(ones(3), 0.0) == 0.0
    assert closed_form_mean(ones(3), 0.25) == pytest.approx(1.0)


def test_closed_form_mean_exact_oracle():
    seq = validate({-1: Fraction(1, 2), 0: 2, 1: Fraction(1, 2)})
    lam = Fraction(1, 5)
    expected = lam * 2 / (1 - lam * 3)
    assert closed_form_mean(seq, 0.2) == pytest.approx(float(expected), rel=1e-14)


def test_supercritical_raises():
    with pytest.raises(SupercriticalError):
        closed_form_mean(ones(3), 1 / 3)
    with pytest.raises(SupercriticalError):
        k_shifted_mean_bound(ones(3), 0.4, 1)


def test_second_moment_width3():
    res = second_moment_bound(ones(3), 0.25)
    assert res.c == pytest.approx(c_oracle(1, 2), abs=1e-12)
    assert res.c == pytest.approx(0.36603, abs=1e-5)
    assert res.threshold == pytest.approx(0.30357, abs=1e-5)
    # the stated one-line threshold 0.91/3, to its rounding
    assert res.threshold == pytest.approx(0.91 / 3, abs=5e-4)
    assert res.bound == pytest.approx(8.298, abs=5e-4)
    assert res.bound == pytest.approx(4 / (2 * (1 + c_oracle(1, 2)) - 2.25), rel=1e-12)


def test_second_moment_zero_rate_and_errors():
    assert second_moment_bound(geometric(Fraction(1, 2), 4), 0.0).bound == 0.0
    with pytest.raises(AboveThresholdError):
        second_moment_bound(ones(3), 0.31)
    with pytest.raises(DegenerateError):
        second_moment_bound(validate({0: 1}), 0.1)


def test_k_shifted_examples():
    assert k_shifted_mean_bound(ones(3), 0.25, 2) == pytest.approx(9.0)
    assert k_shifted_mean_bound(ones(3), 0.25, 0) == pytest.approx(closed_form_mean(ones(3), 0.25))
    assert k_shifted_mean_bound(ones(5), 0.0, 5) == pytest.approx(5.0)


def test_truncate_examples():
    g = geometric(Fraction(1, 2), 6)
    assert truncate(g, 0) == validate({0: 1})
    assert truncate(ones(7), 1) == ones(3)
    assert truncate(g, 6) == g
    assert truncate(g, 100) == g


def test_torus_displacement_examples():
    assert torus_displacement(2, -2, 2) == (-1,)
    assert torus_displacement(-3, 3, 3) == (1,)
    assert torus_displacement((1, -1), (1, -1), 4) == (0, 0)
    with pytest.raises(TorusTooSmallError):
        torus_displacement(0, 1, 1, support_radius=2)


# invariants


@given(st.integers(1, 4).map(lambda r: 2 * r + 1), st.lists(st.floats(0, 0.999), min_size=2, max_size=8))
def test_mean_increasing_in_rate(width, fractions):
    seq = ones(width)
    lams = sorted(set(f * critical_rate(seq) for f in fractions))
    means = [closed_form_mean(seq, lam) for lam in lams]
    assert all(b > a for a, b in zip(means, means[1:]))


def test_mean_diverges_at_critical_rate():
    seq = ones(3)
    lc = critical_rate(seq)
    assert closed_form_mean(seq, lc * (1 - 1e-9)) > 1e8


@given(st.integers(1, 6), st.data())
def test_displacement_antisymmetric(n, data):
    d = data.draw(st.integers(1, 3))
    site = st.tuples(*[st.integers(-n, n)] * d)
    i, j = data.draw(site), data.draw(site)
    fwd, back = torus_displacement(i, j, n), torus_displacement(j, i, n)
    assert all(-n <= c <= n for c in fwd)
    assert fwd == tuple(-c for c in back)
    if n >= 2:
        seq = geometric(Fraction(1, 3), 2, d)
        assert seq.weight(fwd) == seq.weight(back)


@given(st.fractions(Fraction(1, 10**6), 50), st.fractions(Fraction(1, 10), 10))
def test_c_in_open_interval(off, a0):
    seq = validate({-1: off / 2, 0: a0, 1: off / 2})
    c = second_moment_bound(seq, 0.0).c
    assert 0 < c < 0.5
    assert c == pytest.approx(c_oracle(float(a0), float(off)), rel=1e-9)


def test_c_tends_to_half():
    cs = [second_moment_bound(validate({-1: eps, 0: 1, 1: eps}), 0.0).c
          for eps in (Fraction(1, 10**k) for k in range(1, 8))]
    assert all(b > a for a, b in zip(cs, cs[1:]))
    assert 0.5 - cs[-1] < 1e-6


@given(st.integers(1, 2), st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=1, max_size=4))
def test_irreducible_invariant_under_negation(d, vecs):
    raw = {(0,) * d: 1}
    for v in vecs:
        off = v[:d]
        raw[off] = raw[tuple(-c for c in off)] = 1
    raw[(0,) * d] = 1
    mirrored = {tuple(-c for c in off): w for off, w in raw.items()}
    assert is_irreducible(validate(raw, d)) == is_irreducible(validate(mirrored, d))
