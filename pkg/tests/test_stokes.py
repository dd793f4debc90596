import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpc, mpf

from asx import CoeffSeq, Ray, a_star, eval_truncated, working_precision
from asx.errors import BranchError, DomainError, NonConvergenceError, PoleOnRayError, PrecisionError
from asx.formal import linear_series
from asx.models import airy_chain
from asx.numeric import to_mp
from asx.stokes import (
    DecompositionResult,
    RationalFunction,
    decompose_rational,
    h_from_ai,
    h_from_bi,
    phi_argmax,
    phi_profile,
    ref_airy,
    ref_ei,
    reference_psi,
    remainder_seq,
    stokes_constant,
    verify_decomposition,
)
from asx.verification import ei_series, remainder_law_samples

# -- reference functions ---------------------------------------------------------------


def test_ei_examples():
    assert abs(ref_ei(1) - mp.exp(-1) * mpf("1.89511781635593675546652093433")) < mpf(10) ** -28
    with working_precision(256):
        assert abs(100 * ref_ei(100) - 1) < 0.02
    with pytest.raises(DomainError):
        ref_ei(0)
    with pytest.raises(BranchError):
        ref_ei(-1)


@given(st.floats(0.5, 60), st.floats(-3.1, 3.1))
def test_ei_against_mpmath(r, theta):
    x = r * mp.expj(theta)
    want = mp.exp(-x) * mp.ei(x)
    assert abs(ref_ei(x) - want) < mpf(10) ** -60 * max(abs(want), 1)


def test_ei_continuous_across_positive_axis():
    # the cut of the reference lies on the negative axis only
    up = ref_ei(mpc(20, mpf(10) ** -30))
    down = ref_ei(mpc(20, -mpf(10) ** -30))
    assert abs(up - down) < mpf(10) ** -25


def test_airy_examples():
    assert abs(ref_airy(0) - mpf("0.355028053887817239260063186004")) < mpf(10) ** -28
    x = mpf(30)
    zeta = 2 * x ** mpf(1.5) / 3
    assert abs(ref_airy(x) * 2 * mp.sqrt(mp.pi) * x ** mpf(0.25) * mp.exp(zeta) - 1) < 0.01
    with pytest.raises(PrecisionError):
        ref_airy(500, cap_bits=1024)


@given(st.floats(-20, 40))
def test_airy_against_mpmath(x):
    for kind, ref in (("ai", mp.airyai), ("bi", mp.airybi)):
        want = ref(x)
        assert abs(ref_airy(x, kind) - want) < mpf(10) ** -60 * max(abs(want), 1)


def test_h_solutions_solve_the_h_equation():
    with working_precision(512):
        mp.prec = 160
        # the Ai form carries the e^{-t} factor stripped, so it solves the t -> -t equation
        for h, sign in ((h_from_bi, 1), (h_from_ai, -1)):
            for t in (mpf(6), mpf(15)):
                lhs = mp.diff(h, t, 2) + sign * mp.diff(h, t) + mpf(5) / (36 * t * t) * h(t)
                assert abs(lhs) < mpf(10) ** -30


def test_h_from_bi_follows_the_series():
    p, _ = airy_chain()
    seq = linear_series(p, 40)
    t = mpf(40)
    # the error is of the size of the first few omitted terms
    first_omitted = abs(to_mp(seq[30])) * t ** -30
    assert abs(h_from_bi(t) - eval_truncated(seq, t, 30)) < 10 * first_omitted
    assert abs(h_from_ai(t) - eval_truncated(CoeffSeq([(-1) ** k * seq[k] for k in range(41)]), t, 30)) \
        < 10 * first_omitted


# -- remainders --------------------------------------------------------------------------


def test_remainder_of_partial_sum_is_negated_tail():
    seq = ei_series(40)

    def f(x):
        return eval_truncated(seq, x, 25)

    x = mpf(12)
    E = remainder_seq(f, seq, x, [10, 20])
    for n, e in zip((10, 20), E):
        tail = sum(mpf(seq[k]) * x ** -k for k in range(n + 1, 25))
        assert abs(e * mp.exp(-x) - tail) < mpf(10) ** -60


def test_on_axis_remainder_law():
    samples = remainder_law_samples((400,))
    v = samples[400] * (-3 / mp.sqrt(2 * mp.pi))
    assert 0.9 <= v <= 1.1


# -- Stokes constants ---------------------------------------------------------------------

SCHEDULE = list(range(20, 61, 5))


@pytest.fixture(scope="module")
def ei_seq():
    return ei_series(200)


@pytest.mark.parametrize("theta, want", [(mp.pi / 3, 1j * mp.pi), (-mp.pi / 3, -1j * mp.pi), (0, 0)])
def test_ei_stokes_constants(ei_seq, theta, want):
    with working_precision(512):
        rep = stokes_constant(ref_ei, ei_seq, Ray(theta), SCHEDULE, tol=mpf("1e-3"))
        assert abs(rep.C - want) < mpf("1e-3")


def test_off_axis_residuals_decay_exponentially(ei_seq):
    theta = mp.pi / 3
    with working_precision(512):
        rep = stokes_constant(ref_ei, ei_seq, Ray(theta), SCHEDULE, tol=mpf("1e-3"))
        logs = [mp.log(abs(e - rep.C)) for _, _, e in rep.samples]
        diffs = [b - a for a, b in zip(logs, logs[1:])]
        assert all(d < 0 for d in diffs)
        # each step of 5 in |x| gains about 5 (1 - cos theta)
        rate = 1 - mp.cos(theta)
        assert all(abs(-d / 5 - rate) < 0.1 for d in diffs)
        assert abs(rep.convergence_rate - rate) < 0.1


def test_stokes_jump_across_axis(ei_seq):
    with working_precision(512):
        up = stokes_constant(ref_ei, ei_seq, Ray(mpf("0.3")), SCHEDULE, tol=mpf("1e-3"))
        down = stokes_constant(ref_ei, ei_seq, Ray(mpf("-0.3")), SCHEDULE, tol=mpf("1e-3"))
        assert abs(up.C - down.C - 2j * mp.pi) < mpf("1e-3")


def test_stokes_reports_non_convergence(ei_seq):
    with pytest.raises(NonConvergenceError):
        stokes_constant(ref_ei, ei_seq, Ray(mpf("0.3")), SCHEDULE, tol=mpf(10) ** -12)


def test_stokes_schedule_validation(ei_seq):
    with pytest.raises(ValueError):
        stokes_constant(ref_ei, ei_seq, Ray(), [30, 20, 40, 50, 60])
    with pytest.raises(ValueError):
        stokes_constant(ref_ei, ei_seq, Ray(), [20, 30])


# -- the phi equation ----------------------------------------------------------------------


def test_phi_profile_limits():
    a = a_star()
    d4 = abs(phi_profile(10 ** 4) - a)
    d6 = abs(phi_profile(10 ** 6) - a)
    assert d4 >= d6 and d6 < 1e-3
    assert abs(phi_profile(mp.inf) - a) < 1e-9
    assert abs(phi_argmax(mp.inf) - mp.sqrt(2) * mpf("0.9241388730")) < 1e-6
    with pytest.raises(DomainError):
        phi_profile(5)


# -- decomposition ---------------------------------------------------------------------------


def test_decomposition_exact_cases():
    d = decompose_rational(RationalFunction((0,), ((1,),)))
    assert d.K == 1 and all(h == 0 for h in d.H)
    d = decompose_rational(RationalFunction((0,), ((0,), (1,))))
    assert d.K == 1 and d.H[1] == -1 and all(h == 0 for i, h in enumerate(d.H) if i != 1)
    d = decompose_rational(RationalFunction((1,), ((1,),)))
    assert abs(d.K - mp.e) < mpf(10) ** -70


def test_decomposition_residuals():
    tol = mpf(2) ** (-256 + 16)
    R = RationalFunction((0,), ((0,), (1,)))
    assert verify_decomposition(R, decompose_rational(R), [10]) < tol
    R = RationalFunction((0,), ((1,),))
    assert verify_decomposition(R, decompose_rational(R), [10]) < tol


def test_decomposition_solves_the_ode():
    R = RationalFunction((mpc("0.3", "0.2"), mpf("-0.5")), ((1, 2), (mpf("0.5"), 0)))
    d = decompose_rational(R)
    with working_precision(512):
        mp.prec = 200
        for x in (mpf(15), mpf(25)):
            lhs = mp.diff(d.value, x) + d.value(x)
            assert abs(lhs - R(x)) < mpf(10) ** -40


def test_perturbing_K_moves_the_residual():
    R = RationalFunction((0,), ((0,), (1,)))
    d = decompose_rational(R)
    bumped = DecompositionResult(d.K + mpf(10) ** -6, d.H, d.C)
    x = mpf(10)
    res = verify_decomposition(R, bumped, [x])
    assert abs(res / (mpf(10) ** -6 * abs(ref_ei(x))) - 1) < 1e-6


def test_H_radius_of_convergence():
    # a pole at 2: the coefficients of H grow like 2^m / m
    d = decompose_rational(RationalFunction((2,), ((1,),)), terms=80)
    ratio = abs(d.H[79] / d.H[78])
    assert abs(ratio - 2) < 0.1


def test_pole_on_ray_rejected():
    R = RationalFunction((mpf(3),), ((1,),))
    with pytest.raises(PoleOnRayError):
        decompose_rational(R, ray=Ray(0, 1))
    decompose_rational(R, ray=Ray(mp.pi / 2, 1))


def test_reference_needs_x_right_of_poles():
    with pytest.raises(DomainError):
        reference_psi(RationalFunction((5,), ((1,),)), 3)


def test_rational_function_shape_checked():
    with pytest.raises(ValueError):
        RationalFunction((0, 1), ((1,),))
    with pytest.raises(ValueError):
        RationalFunction((), ())


def test_h_series_is_coeffseq():
    d = decompose_rational(RationalFunction((0,), ((1,),)), terms=10)
    assert isinstance(d.H, CoeffSeq) and len(d.H) == 10
