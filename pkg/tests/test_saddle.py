import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from shortcycles import exact, saddle
from shortcycles.errors import DomainError


def test_log_gf_values():
    assert saddle.log_gf(0.5, 1) == pytest.approx(math.log(2) - 0.5)
    assert saddle.log_gf(0.0, 4) == 0
    with pytest.raises(DomainError):
        saddle.log_gf(1.0, 3)


@given(st.integers(2, 3000), st.data())
def test_saddle_equation(n, data):
    r = data.draw(st.integers(1, n - 1))
    x, resid = saddle.saddle_radius(n, r)
    assert 0 < x < 1
    assert resid < 1e-10


def test_trivial_case():
    res = saddle.kappa_contour(10, 5)
    assert res.value == pytest.approx(0.1, rel=1e-13)
    assert res.status == saddle.STATUS_OK


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 400), st.data())
def test_matches_exact(n, data):
    r = data.draw(st.integers(1, n - 1))
    ref = float(exact.kappa_exact(n, r))
    res = saddle.kappa_contour(n, r)
    assert abs(res.value - ref) <= 1e-9 * ref
    assert res.status == saddle.STATUS_OK


def test_point_count_rule():
    n, r = 300, 30
    x, _ = saddle.saddle_radius(n, r)
    m = saddle.auto_num_points(n, r, x)
    assert m >= 8 * (n + 1) and m & (m - 1) == 0
    assert n * x ** m < 1e-13


def test_too_few_points_rejected():
    with pytest.raises(DomainError):
        saddle.kappa_contour(20, 5, num_points=30)
    with pytest.raises(DomainError):
        saddle.kappa_contour(20, 5, num_points=43)


def test_coarse_rule_flags_warning():
    res = saddle.kappa_contour(20, 5, num_points=42)
    assert res.status == saddle.STATUS_WARN
    assert res.alias_bound > 1e-8


def test_halving_change_small_at_default():
    res = saddle.kappa_contour(250, 40)
    assert res.halving_change < 1e-10


def test_multiprecision_variant():
    with mpmath.workdps(40):
        ref = exact.kappa_exact(60, 7)
        want = mpmath.mpf(ref.numerator) / ref.denominator
        got = saddle.kappa_contour_mp(60, 7, dps=30)
        assert abs(got - want) < mpmath.mpf(10) ** -27 * want


def test_domain():
    with pytest.raises(DomainError):
        saddle.saddle_radius(5, 5)
