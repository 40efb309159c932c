import pytest
from hypothesis import given, settings, strategies as st

from shortcycles import exact, tvd
from shortcycles.errors import DomainError, ResourceLimitError

# implied constant of the nu(n, r)/r error term, frozen from the calibration grid
C_T3 = 0.8769


def test_decomposition_identity_40_6():
    dec = tvd.tv_exact(40, 6, 1e-12)
    assert dec.tail_bound < 1e-12
    assert dec.identity_gap <= 2 * dec.tail_bound
    assert 0 < dec.direct_value < 1


def test_truncation_reproducible():
    a = tvd.tv_exact(30, 5, 1e-12)
    b = tvd.tv_exact(30, 5, 1e-12, min_M=2 * a.truncation_M)
    assert b.truncation_M >= 2 * a.truncation_M
    assert abs(a.direct_value - b.direct_value) <= 1e-12


@pytest.mark.parametrize("n", range(6, 13))
def test_against_joint_law(n):
    for r in range(5, n):
        assert abs(tvd.tv_exact(n, r).direct_value - tvd.tv_brute_force(n, r)) <= 1e-12


def test_permissive_small_r_against_joint_law():
    for n in range(3, 11):
        for r in range(1, min(5, n)):
            dec = tvd.tv_exact(n, r, permissive=True)
            assert abs(dec.direct_value - tvd.tv_brute_force(n, r)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(6, 60), st.data())
def test_bounds_and_remainder(n, data):
    r = data.draw(st.integers(5, n - 1))
    dec = tvd.tv_exact(n, r)
    # half the l1 distance can never exceed 1
    assert 0 <= dec.direct_value <= 1
    assert dec.term_remainder <= C_T3 * dec.remainder_scale + 1e-15


def test_domain():
    with pytest.raises(DomainError):
        tvd.tv_exact(40, 4)
    with pytest.raises(DomainError):
        tvd.tv_exact(10, 10, permissive=True)
    with pytest.raises(DomainError):
        tvd.tv_exact(40, 6, tol=0)


def test_nu_tail_refinement():
    a = tvd.nu_tail(8, 30, 1e-10)
    b = tvd.nu_tail(8, 30, 1e-11)
    assert b.M >= a.M
    assert abs(b.partial - a.partial) <= 1e-10
    assert b.tail_bound < 1e-11


def test_nu_tail_from_flat_region():
    # nu = 1 up to r, so the certificate has to wait well past r
    res = tvd.nu_tail(100, 0, 1e-12)
    assert res.M > 100
    assert res.partial > 100


def test_nu_tail_far_start_uses_float_backend():
    res = tvd.nu_tail(100, 10 ** 4, 1e-12)
    assert res.M >= 10 ** 4 and res.tail_bound < 1e-12


def test_nu_tail_iteration_cap():
    with pytest.raises(ResourceLimitError):
        tvd.nu_tail(50, 0, 1e-12, max_terms=40)


def test_nu_tail_sum_matches_table():
    res = tvd.nu_tail(6, 10, 1e-14)
    table = exact.density_table(exact.MAX_CYCLE, 6, res.M)
    want = table.prefix(res.M) - table.prefix(9)
    assert float(res.partial) == pytest.approx(float(want), rel=1e-14)


def test_csv():
    text = tvd.to_csv([tvd.tv_exact(20, 5)])
    head, row = text.splitlines()
    assert head == "n,r,direct,term_head,term_middle,term_remainder,tail_bound,M"
    assert row.startswith("20,5,")
