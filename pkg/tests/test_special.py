import math
import random

import mpmath
import pytest
from hypothesis import given, strategies as st

from shortcycles import special
from shortcycles.errors import AccuracyError, DomainError


def omega_oracle(v):
    """Buchstab's function on [2, 4] by quadrature of the integral equation."""
    v = mpmath.mpf(v)
    on_23 = lambda t: (1 + mpmath.log(t - 1)) / t  # noqa: E731
    if v <= 3:
        return on_23(v)
    return (3 * on_23(3) + mpmath.quad(lambda s: on_23(s), [2, v - 1])) / v


def rho_oracle(v):
    """Dickman's function on [2, 3]: 1 - log v + int_2^v log(t-1)/t dt."""
    v = mpmath.mpf(v)
    return 1 - mpmath.log(v) + mpmath.quad(lambda t: mpmath.log(t - 1) / t, [2, v])


def test_initial_conditions_exact():
    assert special.omega(1.5) == 2 / 3
    assert special.omega(2.0) == 0.5
    assert special.rho(0.5) == 1.0
    assert special.rho(1.0) == 1.0


def test_closed_forms():
    assert special.omega(2.5) == pytest.approx((1 + math.log(1.5)) / 2.5, abs=1e-13)
    assert special.rho(2.0) == pytest.approx(1 - math.log(2), abs=1e-13)


@pytest.mark.parametrize("v", [2.2, 2.9, 3.0, 3.4, 3.95])
def test_buchstab_against_quadrature(v):
    with mpmath.workdps(30):
        assert special.omega(v) == pytest.approx(float(omega_oracle(v)), abs=1e-13)


@pytest.mark.parametrize("v", [2.1, 2.5, 3.0])
def test_dickman_against_quadrature(v):
    with mpmath.workdps(30):
        want = rho_oracle(v)
        assert special.rho(v) == pytest.approx(float(want), rel=1e-13)
        assert abs(special.rho_hp(v, 30) - want) < mpmath.mpf(10) ** -25


def test_high_precision_closed_form():
    with mpmath.workdps(50):
        want = (1 + mpmath.log(mpmath.mpf("1.5"))) / mpmath.mpf("2.5")
        assert abs(special.omega_hp(mpmath.mpf("2.5"), 45) - want) < mpmath.mpf(10) ** -40


@given(st.floats(1.0, 40.0))
def test_double_and_high_precision_agree(v):
    assert special.omega(v) == pytest.approx(float(special.omega_hp(v, 30)), rel=1e-12)
    assert special.rho(v) == pytest.approx(float(special.rho_hp(v, 30)), rel=1e-12)


def test_residuals_small():
    rng = random.Random(3)
    for kind in (special.BUCHSTAB, special.DICKMAN):
        sol = special.default_solution(kind)
        for _ in range(100):
            v = rng.uniform(2.0, 20.0)
            assert abs(sol.residual(v)) <= 1e-10


def test_degree_doubling_stable():
    for kind in (special.BUCHSTAB, special.DICKMAN):
        a = special.solve_delay_ode(kind, 20, degree=20)
        b = special.solve_delay_ode(kind, 20, degree=40)
        for v in [1.5, 2.5, 5.25, 11.0, 19.9]:
            assert abs(a(v) - b(v)) <= 1e-12 * max(1.0, abs(b(v)))


def test_buchstab_limit():
    assert special.omega(30.0) == pytest.approx(math.exp(-special.EULER_GAMMA), abs=1e-13)


def test_rho_decays_and_log_space():
    assert special.rho(10.0) == pytest.approx(2.770171837725958e-11, rel=1e-12)
    # far past double underflow the log is still finite
    lr = special.log_rho(400.0)
    assert math.isfinite(lr) and lr < -2000
    assert special.log_rho(20.0) == pytest.approx(math.log(special.rho(20.0)), rel=1e-12)


def test_low_degree_reports_interval():
    with pytest.raises(AccuracyError) as info:
        special.solve_delay_ode(special.DICKMAN, 10, degree=8)
    assert info.value.interval is not None


def test_validate_and_round_trip(tmp_path):
    sol = special.solve_delay_ode(special.BUCHSTAB, 12)
    special.validate_solution(sol)
    path = special.save_solution(sol, tmp_path)
    back = special.load_solution(path, publish=False)
    assert back(7.3) == sol(7.3)


def test_domain_errors():
    with pytest.raises(DomainError):
        special.omega(0.5)
    with pytest.raises(DomainError):
        special.rho(-1.0)
    with pytest.raises(DomainError):
        special.solve_delay_ode("airy")


def test_extension_beyond_default_range():
    v = special.DEFAULT_V_MAX[special.BUCHSTAB] + 5.5
    assert special.omega(v) == pytest.approx(math.exp(-special.EULER_GAMMA), abs=1e-13)


def test_stored_gamma_matches_mpmath():
    with mpmath.workdps(70):
        assert abs(special.euler_gamma(60) - mpmath.euler) < mpmath.mpf(10) ** -58
    assert special.EULER_GAMMA == float(mpmath.euler)
