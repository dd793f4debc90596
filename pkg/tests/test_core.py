from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpc, mpf

from asx import (
    CoeffSeq,
    Ray,
    a_star,
    dawson,
    dawson_max,
    digamma_real,
    eval_truncated,
    gamma_guarded,
    ray_grid,
    weight_profile,
    weight_transform,
    working_precision,
)
from asx.errors import DomainError, PoleError, RangeError
from asx.numeric import current_precision, extra_precision, lift, parse_scalar, to_mp


def stirling_gamma(z, shift=80):
    """Gamma by upward shift and the Stirling series: no reflection, no Lanczos."""
    with extra_precision(64):
        z = to_mp(z)
        w = z + shift
        s = (w - mpf(1) / 2) * mp.log(w) - w + mp.log(2 * mp.pi) / 2
        for k in range(1, 40):
            s += mp.bernoulli(2 * k) / (2 * k * (2 * k - 1) * w ** (2 * k - 1))
        g = mp.exp(s)
        for j in range(shift):
            g /= z + j
        return g


# -- precision -------------------------------------------------------------------

def test_working_precision_nests_and_restores():
    outer = current_precision()
    with working_precision(300):
        assert mp.prec == 300
        with extra_precision(20):
            assert current_precision() == 320
        assert current_precision() == 300
    assert current_precision() == outer


def test_precision_floor():
    with pytest.raises(DomainError):
        with working_precision(10):
            pass


def test_env_default(monkeypatch):
    monkeypatch.setenv("ASX_PRECISION_BITS", "320")
    assert current_precision() == 320


def test_scalar_parsing():
    assert parse_scalar("5/36") == Fraction(5, 36)
    assert parse_scalar("-7") == -7
    assert isinstance(parse_scalar("0.25"), mpf)
    assert lift(1, Fraction(1, 2)) == (1, Fraction(1, 2))
    assert isinstance(lift(1, mpf(2))[0], mpf)


# -- CoeffSeq and Ray -----------------------------------------------------------------

def test_coeffseq_finite_and_infinite():
    fin = CoeffSeq([1, 2], finite=True)
    assert fin[5] == 0
    inf = CoeffSeq([1, 2])
    with pytest.raises(RangeError):
        inf[5]
    with pytest.raises(RangeError):
        inf.require(3)
    assert inf.exact and inf.nonzero_indices() == [0, 1]


def test_ray_membership():
    ray = Ray(mp.pi / 3, 2)
    assert ray.contains(ray.point(5))
    assert not ray.contains(5)
    assert not ray.contains(ray.point(1))
    with pytest.raises(DomainError):
        Ray(4)
    with pytest.raises(DomainError):
        Ray(0, 0)


def test_ray_accepts_rationals():
    assert Ray(Fraction(1, 2), Fraction(3, 2)).contains(mp.expj(0.5) * 2)


# -- special functions -----------------------------------------------------------------

def test_gamma_guarded_examples():
    assert gamma_guarded(1) == 1
    assert gamma_guarded(mpf("-3.5")) == 1
    assert abs(gamma_guarded(mpf("0.5")) - mp.sqrt(mp.pi)) < mpf(10) ** -70
    with pytest.raises(PoleError):
        gamma_guarded(0)


@given(st.floats(-0.99, 30), st.floats(-5, 5))
def test_gamma_against_stirling_oracle(re, im):
    with working_precision(256):
        z = mpc(re, im) if im else mpf(re)
        if abs(z) < 1e-3:
            return
        got = gamma_guarded(z)
        want = stirling_gamma(z)
        assert abs(got - want) <= mpf(10) ** (-64) * abs(want)


def test_digamma_examples():
    euler = mp.euler
    assert abs(digamma_real(1) + euler) < mpf(10) ** -60
    assert abs(digamma_real(2) - (1 - euler)) < mpf(10) ** -60
    assert abs(digamma_real(10 ** 6) - mp.log(10 ** 6)) < 1e-6
    with pytest.raises(DomainError):
        digamma_real(-1)


def test_eval_truncated_examples():
    ones = CoeffSeq([1] * 10)
    assert eval_truncated(ones, 2, 3) == mpf("1.75")
    assert eval_truncated(ones, 2, 0) == 0
    h = CoeffSeq([1, Fraction(5, 36), Fraction(385, 2592)])
    assert abs(eval_truncated(h, 10, 2) - (1 + mpf(5) / 360)) < mpf(10) ** -70


@given(st.lists(st.fractions(max_denominator=50).filter(lambda q: abs(q) < 100), min_size=1, max_size=30),
       st.floats(1.5, 50))
def test_eval_truncated_stable_under_precision_doubling(cs, x):
    seq = CoeffSeq(cs)
    with working_precision(256):
        lo = eval_truncated(seq, x, len(cs))
    with working_precision(512):
        hi = eval_truncated(seq, x, len(cs))
        scale = sum(abs(to_mp(c)) * mpf(x) ** -k for k, c in enumerate(cs))
    assert abs(lo - hi) <= mpf(2) ** (-256 + 8) * max(scale, mpf(1))


# -- weights -----------------------------------------------------------------------------

def geometric():
    seq = CoeffSeq([mpf(2) ** -k for k in range(80)])

    def f(x):
        x = to_mp(x)
        return 2 * x / (2 * x - 1)

    return f, seq


def test_weight_of_convergent_series():
    f, seq = geometric()
    ray = Ray(0, 1)
    grid = ray_grid(ray, 40, density=6)
    for n in (1, 5, 20):
        w = weight_transform(f, seq, ray, n, grid)
        assert abs(w - mpf(2) ** (1 - n)) < mpf(10) ** -40 * w  # attained at x0
    ws = [weight_transform(f, seq, ray, n, grid) for n in range(1, 40)]
    assert all(b < a for a, b in zip(ws, ws[1:])) and ws[-1] < mpf(10) ** -10


def test_weight_of_partial_sum_is_zero():
    _, seq = geometric()
    ray = Ray()
    grid = ray_grid(ray, 20)
    assert weight_transform(lambda x: eval_truncated(seq, x, 6), seq, ray, 6, grid) == 0


@given(st.integers(1, 12), st.integers(2, 6))
def test_weight_monotone_under_refinement(n, density):
    from asx.stokes import ref_ei
    from asx.verification import ei_series

    seq = ei_series(20)
    ray = Ray()
    coarse = ray_grid(ray, 30, density=density)
    fine = coarse + ray_grid(ray, 30, density=2 * density + 1)
    with working_precision(128):
        assert weight_transform(ref_ei, seq, ray, n, fine) >= weight_transform(ref_ei, seq, ray, n, coarse)


def test_weight_grid_must_lie_on_ray():
    f, seq = geometric()
    with pytest.raises(ValueError):
        weight_transform(f, seq, Ray(mp.pi / 2), 2, [3])


def test_weight_profile_carries_a_star():
    f, seq = geometric()
    prof = weight_profile(f, seq, Ray(), [1, 2], ray_grid(Ray(), 5))
    assert set(prof.samples) == {1, 2}
    assert abs(prof.a_star - mpf("0.7651520803")) < 1e-9


# -- a* ------------------------------------------------------------------------------------

def erfi_dawson_max(bits):
    """Maximum of Dawson's integral through erfi and a root finder."""
    with working_precision(bits + 32):
        def D(x):
            return mp.sqrt(mp.pi) / 2 * mp.exp(-x * x) * mp.erfi(x)

        x = mp.findroot(lambda x: 1 - 2 * x * D(x), mpf("0.92"))
        return x, D(x)


def test_dawson_against_erfi():
    with working_precision(256):
        for x in ("0.1", "0.9", "1.5", "1.6", "4", "12"):
            x = mpf(x)
            want = mp.sqrt(mp.pi) / 2 * mp.exp(-x * x) * mp.erfi(x)
            assert abs(dawson(x) - want) < mpf(10) ** -70 * abs(want)
        assert dawson(-mpf(1)) == -dawson(1)


def test_a_star_against_independent_root():
    with working_precision(256):
        x, d = erfi_dawson_max(256)
        xm, dm = dawson_max()
        assert abs(xm - x) < mpf(10) ** -60
        assert abs(dm - d) < mpf(10) ** -70
        assert abs(a_star() - mp.sqrt(2) * d) < mpf(10) ** -70


def test_a_star_printed_digits_and_stability():
    assert abs(a_star(256) - mpf("0.76515")) < 2e-5
    assert abs(a_star(512) - a_star(256)) < mpf(10) ** -70
