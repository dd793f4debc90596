from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from asx import CoeffSeq, Ray, a_star, eval_truncated, ray_grid, working_precision
from asx.errors import DomainError, TooSmallError
from asx.formal import GrowthModel, linear_series
from asx.models import airy_chain
from asx.stokes import h_from_bi, ref_ei
from asx.summation import (
    a_theta,
    eta_from_profile,
    eta_profile,
    flanking_from_point,
    flanking_indices,
    least_term_index,
    least_term_point,
    on_stokes_line,
    optimal_weight,
    smallest_B,
    sum_least_term,
    sup_statistic,
)
from asx.verification import ei_series

FACT = GrowthModel.factorial()


# -- truncation orders --------------------------------------------------------------

def test_least_term_point_against_root_finder():
    s = least_term_point(FACT, 10)
    oracle = mp.findroot(lambda u: mp.digamma(u) - mp.log(10), 10)
    assert abs(s - oracle) < mpf(10) ** -60
    assert abs(s - mpf("10.49")) < 0.01
    assert least_term_index(FACT, 10) == 10


def test_transseries_rule():
    assert least_term_index(GrowthModel(R=1, alpha=-1), 25, rule="transseries") == 25
    with pytest.raises(TooSmallError):
        least_term_index(FACT, mpf("1.1"))


@pytest.mark.parametrize("X", [10, 30, 100])
def test_least_term_index_minimises_terms(X):
    terms = [mp.factorial(n - 1) / mpf(X) ** n for n in range(1, 2 * X + 2)]
    best = 1 + min(range(len(terms)), key=lambda i: terms[i])
    assert abs(least_term_index(FACT, X) - best) <= 1


def test_flanking_example():
    assert flanking_from_point(100, 1) == (86, 113)


@given(st.floats(50, 500), st.floats(0.5, 8))
def test_flanking_spread_scales_with_inverse_root_gamma(s, gamma):
    lo, hi = flanking_from_point(s, gamma)
    spread = hi - lo
    want = 2 * mp.sqrt(s / gamma) / a_star()
    assert abs(spread - want) <= 1


# -- weights --------------------------------------------------------------------------

def test_optimal_weight_examples():
    assert optimal_weight(FACT, 0, True, 10, 50) == 0
    off = optimal_weight(GrowthModel(R=1, r=Fraction(1, 2), alpha=2), 1, False, 3, 20)
    assert abs(off - 3 * mp.gamma(mpf(20.5)) * mpf(2) ** -20) < mpf(10) ** -60 * off
    on = optimal_weight(FACT, 1, True, 10, 100)
    assert abs(on - (a_star() * 10 + 10) * mp.gamma(100)) < mpf(10) ** -60 * on


@given(st.integers(1, 300), st.floats(0.1, 20))
def test_optimal_weight_positive_and_log_convex(k, B):
    w = [optimal_weight(FACT, 1, False, B, j) for j in (k, k + 1, k + 2)]
    assert all(v > 0 for v in w)
    assert w[1] ** 2 <= w[0] * w[2] * (1 + mpf(10) ** -60)


def test_stokes_line_detection():
    assert on_stokes_line(0, 1)
    assert not on_stokes_line(mpf("0.1"), 1)
    assert on_stokes_line(mp.pi, -1)


def test_a_theta_examples():
    assert a_theta(mp.pi) == 1
    assert abs(a_theta(mp.pi / 2) - (1 + mp.sqrt(2)) / 2) < mpf(10) ** -60
    assert abs(mpf("0.01") * a_theta(mpf("0.01")) - 1) < 0.01
    with pytest.raises(DomainError):
        a_theta(0)


@given(st.floats(1e-3, 3.14159))
def test_a_theta_exceeds_one_off_pi(theta):
    assert a_theta(theta) > 1


# -- sup statistic ------------------------------------------------------------------------

SEQ = ei_series(1000)


def test_single_term_window():
    r = sup_statistic(SEQ, 100, k0=3)
    assert abs(r.profile[r.n_x] - 1 / mp.sqrt(r.n_x + 3)) < mpf(10) ** -60


def test_sup_near_a_star_at_100():
    r = sup_statistic(SEQ, 100)
    assert abs(r.value - a_star()) / a_star() < 0.15


@pytest.mark.parametrize("X", [50, 100, 200])
def test_sup_argmax_near_a_flank(X):
    r = sup_statistic(SEQ, X)
    half = mpf("0.1") * mp.sqrt(r.n_x)
    assert min(abs(r.argmax_K - n) for n in flanking_indices(X)) <= half


def test_sup_deviation_shrinks():
    devs = [abs(sup_statistic(SEQ, X).value - a_star()) for X in (50, 100, 200)]
    assert devs[0] > devs[1] > devs[2]


def test_off_axis_sup_is_bounded():
    vals = [sup_statistic(SEQ, X * mp.expj(mp.pi / 2)).value for X in (50, 100, 200)]
    assert max(vals) < 2
    assert max(vals) - min(vals) < mpf(10) ** -6


def test_sup_uses_growth_model_when_given():
    r = sup_statistic(SEQ, 100, g=FACT)
    assert r.n_x == least_term_index(FACT, 100)


# -- least-term sums ----------------------------------------------------------------------

def test_least_term_sum_ei():
    seq = ei_series(80)
    value, bound = sum_least_term(seq, FACT, 10)
    err = abs(value - ref_ei(10))
    assert err < mp.exp(-10)
    assert err < bound


def test_least_term_sum_airy():
    p, _ = airy_chain()
    seq = linear_series(p, 60)
    g = GrowthModel(R=1 / (2 * mp.pi))
    value, _ = sum_least_term(seq, g, 20)
    err = abs(value - h_from_bi(20))
    assert err * mp.sqrt(20) * mp.exp(20) < 1


def test_least_term_bound_collapses_for_convergent_series():
    seq = CoeffSeq([mpf(2) ** -k for k in range(200)])

    def f(x):
        return 2 * mpf(x) / (2 * mpf(x) - 1)

    bounds = []
    for X in (10, 20, 40):
        value, bound = sum_least_term(seq, FACT, X)
        assert abs(value - f(X)) < bound
        bounds.append(bound)
    assert bounds[0] > bounds[1] > bounds[2] and bounds[2] < mpf(10) ** -15


# -- eta ----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ei_eta_profile():
    seq = ei_series(260)
    with working_precision(128):
        grid = ray_grid(Ray(), 400, density=20, r_min=2)
        return eta_profile(ref_ei, seq, Ray(), 200, grid)


def test_eta_for_ei_series(ei_eta_profile):
    prof = ei_eta_profile
    tail = prof[200] / mp.sqrt(200)
    assert 0.9 <= tail <= 1.1
    # the normalised profile settles towards 1 from above
    assert prof[10] / mp.sqrt(10) > prof[100] / mp.sqrt(100) > tail
    B = smallest_B(prof, mpf("1.1"))
    assert eta_from_profile(prof, B) <= mpf("1.1") * (1 + mpf(10) ** -30)
    print(f"smallest B with eta <= 1.1: {mp.nstr(B, 6)}")


def test_eta_of_least_term_truncation():
    seq = ei_series(200)

    def phi(x):
        return eval_truncated(seq, x, least_term_index(FACT, x) + 1)

    with working_precision(128):
        prof = eta_profile(phi, seq, Ray(), 60, ray_grid(Ray(), 150, density=10, r_min=3))
        assert eta_from_profile(prof, 10) <= 1
        B = smallest_B(prof, 1)
        print(f"least-term truncation: smallest B with eta <= 1: {mp.nstr(B, 6)}")


def test_eta_of_fixed_partial_sum_grows_with_grid():
    seq = ei_series(60)

    def fixed(x):
        return eval_truncated(seq, x, 30)

    with working_precision(128):
        etas = [eta_from_profile(eta_profile(fixed, seq, Ray(), 40, ray_grid(Ray(), R, density=10, r_min=30)), 10)
                for R in (80, 160, 320)]
    assert 100 < etas[0] < etas[1] < etas[2]
