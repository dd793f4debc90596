"""Formal series solutions, their factorial growth, and the inverse problem.

For a canonical second-order equation with ``a_0 = alpha`` and ``r = -a_1``
the formal solution ``sum s_n x^-n`` (``s_0 = 1``) satisfies

    alpha n s_n = n (n - 1 + r) s_{n-1} + (a_1 + b_2) s_{n-1}
                  + sum_{j=2}^{n} ((j - n) a_j + b_{j+1}) s_{n-j}

and its coefficients grow like ``R Gamma(n + r) alpha^{-n}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from mpmath import mp, mpf

from .core import CoeffSeq, gamma_guarded
from .errors import (
    DivergentFitError,
    IllConditionedError,
    NotCanonicalError,
    PreconditionError,
    RangeError,
)
from .models import FirstOrderProblem, SecondOrderProblem
from .numeric import all_exact, is_exact, to_mp, with_precision


@dataclass
class GrowthModel:
    """``s_n ~ (R + R_1/n + ... + R_M/n^M) Gamma(n + r) alpha^{-n}``.

    ``gamma`` is the curvature of ``G(s) = gamma log Gamma(s + rho) - s log|alpha|``,
    so that ``|s_n x^-n|`` is smallest where ``G'(s) = log|x|``.
    """

    R: object
    R_m: tuple = ()
    alpha: object = 1
    r: object = 0
    gamma: object = 1
    phi: object = 0
    eps_residuals: list = field(default_factory=list)

    def __post_init__(self):
        if not to_mp(self.gamma) > 0:
            raise ValueError("gamma must be positive")

    @property
    def rho(self):
        r = self.r
        return r if is_exact(r) else mp.re(to_mp(r))

    @property
    def Delta(self):
        return self.alpha

    @classmethod
    def factorial(cls, alpha=1, r=0, R=1) -> "GrowthModel":
        return cls(R=R, alpha=alpha, r=r)

    def G(self, s):
        s = to_mp(s)
        return to_mp(self.gamma) * mp.loggamma(s + to_mp(self.rho)) - s * mp.log(abs(to_mp(self.alpha)))


def _conv(exact):
    return Fraction if exact else to_mp


# -- second order -------------------------------------------------------------------

@with_precision
def linear_series(p: SecondOrderProblem, N: int) -> CoeffSeq:
    """Formal solution ``1 + s_1/x + ... + s_N/x^N`` of a canonical problem."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if not (p.b[0] == 0 and p.b[1] == 0 and p.a[0] != 0):
        raise NotCanonicalError("linear_series needs b_0 = b_1 = 0 and a_0 != 0")
    if not p.a.available(N + 1) or not p.b.available(N + 2):
        raise RangeError(f"coefficients of a and b are needed up to index {N}")
    exact = all_exact(list(p.a[: N + 1]) + list(p.b[: N + 2]))
    cv = _conv(exact)
    alpha = cv(p.a[0])
    a1 = cv(p.a[1])
    r = -a1
    b2 = cv(p.b[2])
    # only indices with a nonzero contribution enter the convolution
    terms = []
    for j in range(2, N + 1):
        aj, bj1 = p.a[j], p.b[j + 1]
        if aj != 0 or bj1 != 0:
            terms.append((j, cv(aj), cv(bj1)))
    s = [cv(1)]
    for n in range(1, N + 1):
        acc = (n - 1 + r) * n * s[n - 1] + (a1 + b2) * s[n - 1]
        for j, aj, bj1 in terms:
            if j > n:
                break
            acc += ((j - n) * aj + bj1) * s[n - j]
        s.append(acc / (n * alpha))
    return CoeffSeq(s)


@with_precision
def power_matching_residual(p: SecondOrderProblem, seq: CoeffSeq, N: int) -> list:
    """Coefficients of ``x^{-m}``, ``m = 2..N+1``, of ``L[y]`` for the truncated series.

    Direct substitution of ``y = sum_{n<=N} s_n x^-n`` into ``y'' + a y' + b y``;
    the coefficient of ``x^{-m}`` only involves ``s_n`` with ``n <= m - 1``, so
    all listed entries vanish exactly for a correct formal solution.
    """
    exact = seq.exact and all_exact(list(p.a[: N + 2]) + list(p.b[: N + 2]))
    cv = _conv(exact)
    s = [cv(seq[n]) for n in range(N + 1)]
    out = []
    for m in range(2, N + 2):
        tot = cv(0)
        # y'' = sum n(n+1) s_n x^{-n-2}
        if m - 2 <= N:
            tot += (m - 2) * (m - 1) * s[m - 2]
        # a y' with y' = -sum n s_n x^{-n-1}
        for n in range(1, min(N, m - 1) + 1):
            k = m - n - 1
            tot -= cv(p.a[k]) * n * s[n]
        # b y
        for n in range(0, min(N, m) + 1):
            tot += cv(p.b[m - n]) * s[n]
        out.append(tot)
    return out


# -- first order -----------------------------------------------------------------------

@with_precision
def nonlinear_series(p: FirstOrderProblem, N: int) -> CoeffSeq:
    """Formal solution ``sum_{k>=1} s_k x^-k`` of ``y' = sum_p f_p(x) y^p``.

    Index 0 holds ``s_0 = 0`` so that ``seq[k]`` multiplies ``x^-k``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    P = p.P
    for q, fq in enumerate(p.f):
        if not fq.available(N + 1):
            raise RangeError(f"f_{q} needs coefficients up to index {N}")
    exact = all(fq.finite or fq.exact for fq in p.f) and all(
        all_exact(fq[: N + 1]) for fq in p.f
    )
    cv = _conv(exact)
    f = [[cv(fq[i]) for i in range(N + 1)] for fq in p.f]
    alpha = -f[1][0]
    s = [cv(0)] * (N + 1)
    # powers[q][m]: coefficient of x^-m in Y^q (Y^0 = 1)
    powers = [[cv(0)] * (N + 1) for _ in range(P + 1)]
    powers[0][0] = cv(1)
    for k in range(1, N + 1):
        for q in range(2, P + 1):
            powers[q][k] = sum((s[j] * powers[q - 1][k - j] for j in range(1, k)), cv(0))
        Q = cv(0)
        for q in range(P + 1):
            fq = f[q]
            for i in range(0, k + 1):
                if q == 1 and i == 0:
                    continue
                c = fq[i]
                if c != 0:
                    pw = powers[q][k - i] if q != 1 else s[k - i]
                    if pw != 0:
                        Q += c * pw
        s[k] = ((k - 1) * s[k - 1] + Q) / alpha
        powers[1][k] = s[k]
    # the exponent of the recessive solution, two equivalent forms
    if N >= 1 and P >= 2:
        lhs = f[1][1] + 2 * f[2][0] * f[0][1] / alpha
        rhs = f[1][1] + 2 * f[2][0] * s[1]
        assert abs(to_mp(lhs - rhs)) <= mpf(2) ** (-mp.prec + 16) * (1 + abs(to_mp(lhs)))
    return CoeffSeq(s)


@with_precision
def first_order_residual(p: FirstOrderProblem, seq: CoeffSeq, N: int) -> list:
    """Coefficients of ``x^-k``, ``k = 1..N``, of ``y' - sum_p f_p y^p``.

    Evaluated by straightforward polynomial multiplication of truncated series.
    """
    exact = seq.exact and all(all_exact(fq[: N + 1]) for fq in p.f)
    cv = _conv(exact)
    y = [cv(seq[k]) if k <= seq.N else cv(0) for k in range(N + 1)]

    def mul(u, v):
        w = [cv(0)] * (N + 1)
        for i, ui in enumerate(u):
            if ui == 0:
                continue
            for j in range(0, N + 1 - i):
                w[i + j] += ui * v[j]
        return w

    rhs = [cv(0)] * (N + 1)
    power = [cv(1)] + [cv(0)] * N
    for q, fq in enumerate(p.f):
        coeffs = [cv(fq[i]) for i in range(N + 1)]
        term = mul(coeffs, power)
        rhs = [u + v for u, v in zip(rhs, term)]
        power = mul(power, y)
    # y' = -sum k s_k x^{-k-1}
    dy = [cv(0)] * (N + 1)
    for k in range(1, N):
        dy[k + 1] = -k * y[k]
    return [dy[k] - rhs[k] for k in range(1, N + 1)]


# -- growth fitting ---------------------------------------------------------------------

def _extrapolate(ns, vals, order):
    """Polynomial fit in ``1/n`` through ``order+1`` nodes; returns coefficients."""
    A = mp.matrix(len(ns), order + 1)
    for i, n in enumerate(ns):
        u = mpf(1) / n
        for m in range(order + 1):
            A[i, m] = u ** m
    rhs = mp.matrix([to_mp(v) for v in vals])
    sol = mp.lu_solve(A, rhs)
    return [sol[m] for m in range(order + 1)]


def _nodes(lo: int, hi: int, count: int) -> list:
    if count == 1:
        return [hi]
    step = (hi - lo) / (count - 1)
    nodes = sorted({int(round(lo + i * step)) for i in range(count)})
    if len(nodes) < count:
        raise ValueError("window too narrow for the requested order")
    return nodes


@with_precision
def growth_ratios(seq: CoeffSeq, alpha, r, start: int = 1) -> dict:
    """``c_n = s_n alpha^n / Gamma(n + r)`` for ``n >= start``."""
    al, rr = to_mp(alpha), to_mp(r)
    out = {}
    for n in range(start, len(seq)):
        out[n] = to_mp(seq[n]) * al ** n / gamma_guarded(n + rr)
    return out


@with_precision
def fit_growth(seq: CoeffSeq, alpha, r, M: int = 2, window: Optional[tuple] = None) -> GrowthModel:
    """Fit ``c_n = s_n alpha^n / Gamma(n + r) ~ R + R_1/n + ... + R_M/n^M``.

    The constants come from polynomial (Richardson) extrapolation in ``1/n``
    through ``M + 1`` equally spaced nodes of the tail window, by default
    the last quarter of the sequence.
    """
    N = len(seq) - 1
    if N + 1 < 50:
        raise ValueError("fit_growth needs at least 50 coefficients")
    if not 0 <= M <= 4:
        raise ValueError("M must lie in 0..4")
    lo, hi = window if window is not None else (3 * N // 4, N)
    start = max(1, N // 2)
    c = growth_ratios(seq, alpha, r, start=start)
    # boundedness: the last quarter must not blow up relative to the one before
    q = N // 4
    prev = max(abs(c[n]) for n in range(max(start, N - 2 * q), N - q + 1))
    tail = max(abs(c[n]) for n in range(N - q, N + 1))
    if tail > mpf(3) / 2 * prev and tail > mpf(2) ** (-mp.prec // 2):
        raise DivergentFitError("c_n grows over the tail: alpha or r do not match the data")
    ns = _nodes(lo, hi, M + 1)
    coef = _extrapolate(ns, [c[n] for n in ns], M)
    R = coef[0]
    Rm = tuple(coef[1:])
    eps = []
    if R != 0:
        for n in range(start, N + 1):
            model = 1 + sum(Rm[m - 1] / R / mpf(n) ** m for m in range(1, M + 1))
            eps.append(abs(c[n] / R - model))
    return GrowthModel(R=R, R_m=Rm, alpha=alpha, r=r, eps_residuals=eps)


# -- reconstruction -------------------------------------------------------------------

@dataclass
class Reconstruction:
    """Recovered canonical coefficients; unpacks as ``a, b``.

    ``spread`` lists, per coefficient, the disagreement between the two tail
    windows and ``residual`` is its maximum.
    """

    a: CoeffSeq
    b: CoeffSeq
    spread: list
    residual: object
    expansion: tuple = ()

    def __iter__(self):
        return iter((self.a, self.b))


# truncated power series in u = 1/n, stored as coefficient lists

def _ps_mul(p, q, K):
    out = [mpf(0)] * K
    for i, pi in enumerate(p[:K]):
        if pi == 0:
            continue
        for j in range(0, K - i):
            if j < len(q):
                out[i + j] += pi * q[j]
    return out


def _ps_inv(p, K):
    if p[0] == 0:
        raise ZeroDivisionError("series with vanishing constant term")
    out = [mpf(0)] * K
    out[0] = 1 / p[0]
    for k in range(1, K):
        acc = mpf(0)
        for i in range(1, k + 1):
            if i < len(p):
                acc += p[i] * out[k - i]
        out[k] = -acc / p[0]
    return out


def _ps_shifted(w, shift, K):
    """``W(u / (1 - shift u))`` for ``W = sum w_k u^k``."""
    out = [mpf(0)] * K
    for k, wk in enumerate(w[:K]):
        if wk == 0:
            continue
        # (u/(1 - s u))^k = u^k sum_l C(k+l-1, l) s^l u^l
        for l in range(0, K - k):
            c = mp.binomial(k + l - 1, l) if k > 0 else (1 if l == 0 else 0)
            out[k + l] += wk * c * mpf(shift) ** l
    return out


@with_precision
def ratio_expansion(seq: CoeffSeq, alpha, r, window: tuple, order: int) -> list:
    """Coefficients ``w_0..w_order`` of ``c_{n-1}/c_n = sum_k w_k n^-k``.

    Here ``c_n = s_n alpha^n / Gamma(n + r)``.  ``w_0 = 1`` is imposed (this is
    where ``R != 0`` enters) and the rest is extrapolated in ``1/n`` through
    ``order`` equally spaced nodes of ``window``.
    """
    al, rr = to_mp(alpha), to_mp(r)
    lo, hi = window
    ns = _nodes(lo, hi, order)
    vals = []
    for n in ns:
        ratio = to_mp(seq[n - 1]) / to_mp(seq[n]) * (n - 1 + rr) / al
        vals.append((ratio - 1) * n)
    coef = _extrapolate(ns, vals, order - 1)
    return [mpf(1)] + list(coef)


def _b_from_low_order(s, alpha, a, b, n):
    """Exact recurrence at order ``n`` solved for ``b_{n+1}``."""
    tot = alpha * n * s[n] - n * (n - 1) * s[n - 1]
    for j in range(1, n):
        tot -= ((j - n) * a[j] + b[j + 1]) * s[n - j]
    return tot / s[0]


def _solve_system(s, alpha, r, w, J):
    """Alternate the exact low-order equations and the large-n matching."""
    K = J + 1
    a = [alpha, -r]
    b = [mpf(0), mpf(0)]
    b.append(_b_from_low_order(s, alpha, a, b, 1))
    # alpha / rho_n - (n - 1) with rho_n = s_{n-1}/s_n, as a series in u
    inv_w = _ps_inv(w, K + 1)
    lead = [mpf(1), r - 1]
    v = _ps_mul(lead, inv_w, K + 1)
    v[0] -= 1
    v[1] += 1
    main = v[1:K + 1]
    # rho_{n-i} = alpha u / (1 - (i + 1 - r) u) * W(u / (1 - i u))
    rho = {}

    def rho_series(i):
        if i not in rho:
            geo = [mpf(0)] + [(i + 1 - r) ** k for k in range(K - 1)]
            rho[i] = [alpha * c for c in _ps_mul(geo, _ps_shifted(w, i, K), K)]
        return rho[i]

    products = {1: [mpf(1)] + [mpf(0)] * (K - 1)}
    for j in range(2, K + 1):
        products[j] = _ps_mul(products[j - 1], rho_series(j - 1), K)
    for j in range(2, J + 1):
        b.append(_b_from_low_order(s, alpha, a, b, j))
        x = main[j - 1]
        for jj in range(1, j):
            # ((jj u - 1) a_jj + b_{jj+1} u) * prod_{i<jj} rho_{n-i}
            coeff = [-a[jj], jj * a[jj] + b[jj + 1]]
            term = _ps_mul(coeff, products[jj], K)
            x -= term[j - 1]
        a.append(-x / alpha ** (j - 1))
    return a, b


@with_precision
def reconstruct_equation(seq: CoeffSeq, growth: GrowthModel, J: int,
                         tol=mpf("1e-6"), order: int = 10) -> Reconstruction:
    """Recover the canonical equation solved by a formal series.

    ``a_0 = alpha`` and ``a_1 = -r`` are taken from the growth model.  Each
    ``b_{j+1}`` then follows exactly from the recurrence at low order, while
    ``a_j`` is fixed by matching the large-``n`` expansion of the recurrence
    divided by ``s_n``; that expansion needs the ``1/n`` coefficients of
    ``s_{n-1}/s_n``, which are extrapolated from the tail of the series.
    The whole solve runs twice, on two disjoint tail windows, and a
    disagreement above ``10 * tol`` raises ``IllConditionedError``.
    """
    if abs(to_mp(growth.R)) <= mpf(2) ** (-(mp.prec // 2)):
        raise PreconditionError("reconstruction needs a nonzero growth constant R")
    if J < 1:
        raise ValueError("J must be at least 1")
    N = len(seq) - 1
    if N < 20 * J:
        raise RangeError(f"need about {20 * J} coefficients, got {N + 1}")
    s = [to_mp(v) for v in seq]
    if s[0] == 0:
        raise PreconditionError("the series must be normalised with s_0 != 0")
    alpha, r = to_mp(growth.alpha), to_mp(growth.r)
    windows = ((N // 2, 3 * N // 4), (3 * N // 4, N))
    sols = []
    for win in windows:
        w = ratio_expansion(seq, alpha, r, win, order)
        sols.append((_solve_system(s, alpha, r, w, J), w))
    (a_lo, b_lo), _ = sols[0]
    (a, b), w = sols[1]
    spread = [abs(x - y) for x, y in zip(a_lo + b_lo, a + b)]
    residual = max(spread)
    if residual > 10 * to_mp(tol):
        raise IllConditionedError(
            f"tail windows disagree by {mp.nstr(residual, 5)}; use a longer series"
        )
    return Reconstruction(CoeffSeq(a), CoeffSeq(b), spread, residual, tuple(w))


# -- the Airy coefficients -----------------------------------------------------------

def airy_closed_form(n: int):
    """``Gamma(n + 5/6) Gamma(n + 1/6) / (2 pi n!)``."""
    return mp.gamma(n + mpf(5) / 6) * mp.gamma(n + mpf(1) / 6) / (2 * mp.pi * mp.factorial(n))


def airy_coeffs(N: int):
    """``h_0..h_N`` from the recurrence and from the closed form, both exact.

    The closed form is evaluated in rational arithmetic as
    ``(1/6)_n (5/6)_n / n!`` (Pochhammer symbols), which equals the Gamma
    expression because ``Gamma(1/6) Gamma(5/6) = 2 pi``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    rec = [Fraction(1)]
    for j in range(N):
        rec.append((j + Fraction(1, 6)) * (j + Fraction(5, 6)) * rec[j] / (j + 1))
    closed = []
    p1 = p5 = fact = Fraction(1)
    for n in range(N + 1):
        if n > 0:
            p1 *= n - 1 + Fraction(1, 6)
            p5 *= n - 1 + Fraction(5, 6)
            fact *= n
        closed.append(p1 * p5 / fact)
    return CoeffSeq(rec), CoeffSeq(closed)
