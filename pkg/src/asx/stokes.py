"""Reference functions, remainders, Stokes constants and the rational splitting.

The reference solutions are evaluated from everywhere-convergent series with
enough guard bits to absorb the cancellation between their terms.  Stokes
constants are read off the remainder left after least-term truncation,
measured in units of the recessive exponential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np
from mpmath import mp, mpf
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .core import CoeffSeq, Ray, eval_truncated
from .errors import (
    BranchError,
    DomainError,
    NonConvergenceError,
    PoleOnRayError,
    PrecisionError,
)
from .formal import GrowthModel
from .numeric import (
    all_exact,
    demote,
    extra_precision,
    to_mp,
    with_precision,
)
from .summation import least_term_index

AIRY_PRECISION_CAP = 1 << 17


# -- reference functions -------------------------------------------------------------

def _ei_series(x):
    total = mpf(0)
    term = mpf(1)  # x^k / k!
    eps = mpf(2) ** (-mp.prec)
    k = 0
    ax = abs(x)
    while True:
        k += 1
        term = term * x / k
        contrib = term / k
        total += contrib
        if k > ax and abs(contrib) <= eps * max(abs(total), 1):
            break
    return total


@with_precision
def ref_ei(x):
    """``e^{-x} Ei(x)`` with the principal logarithm.

    ``Ei(x) = gamma_E + Log x + sum_{k>=1} x^k / (k k!)``.  On the positive axis
    this is the principal-value integral; continued off the axis it picks up
    ``+pi i`` for ``0 < arg x < pi`` and ``-pi i`` below, relative to the
    on-axis value.
    """
    x = to_mp(x)
    if x == 0:
        raise DomainError("Ei is singular at 0")
    if mp.im(x) == 0 and mp.re(x) < 0:
        raise BranchError("the negative real axis is the branch cut")
    guard = int(2 * abs(x) / mp.log(2)) + 32
    with extra_precision(guard):
        ei = mp.euler + mp.log(x) + _ei_series(x)
        val = mp.exp(-x) * ei
    return demote(+val)


def _airy_parts(x):
    x3 = x ** 3
    eps = mpf(2) ** (-mp.prec)
    f = term = mpf(1)
    k = 0
    while True:
        term = term * x3 / ((3 * k + 2) * (3 * k + 3))
        f += term
        k += 1
        if abs(term) <= eps * max(abs(f), 1) and k > 2:
            break
    g = term = x
    k = 0
    while True:
        term = term * x3 / ((3 * k + 3) * (3 * k + 4))
        g += term
        k += 1
        if abs(term) <= eps * max(abs(g), 1) and k > 2:
            break
    return f, g


@with_precision
def ref_airy(x, kind: str = "ai", cap_bits: int = AIRY_PRECISION_CAP):
    """Airy function ``Ai`` (or ``Bi`` with ``kind="bi"``) from its Maclaurin series.

    The two series grow like ``exp((2/3)|x|^{3/2})`` while ``Ai`` decays, so the
    working precision is raised by about twice that exponent in bits.
    """
    x = to_mp(x)
    if abs(x) > 1000:
        raise DomainError("ref_airy is limited to |x| <= 1000")
    if kind not in ("ai", "bi"):
        raise ValueError("kind must be 'ai' or 'bi'")
    zeta = 2 * abs(x) ** mpf(1.5) / 3
    guard = int(2 * zeta / mp.log(2)) + 32
    if mp.prec + guard > cap_bits:
        raise PrecisionError(f"Airy evaluation would need {mp.prec + guard} bits (cap {cap_bits})")
    with extra_precision(guard):
        f, g = _airy_parts(x)
        c1 = mpf(3) ** (-mpf(2) / 3) / mp.gamma(mpf(2) / 3)
        c2 = mpf(3) ** (-mpf(1) / 3) / mp.gamma(mpf(1) / 3)
        if kind == "ai":
            val = c1 * f - c2 * g
        else:
            val = mp.sqrt(3) * (c1 * f + c2 * g)
    return demote(+val)


def h_from_bi(t):
    """Solution ``h(t) = sqrt(pi) e^{-zeta} x^{1/4} Bi(x)`` of the h-equation.

    ``x = (3t/4)^{2/3}`` and ``zeta = t/2``.  This is the solution whose
    large-``t`` expansion is ``sum h_k t^-k`` with ``h_0 = 1`` in the median
    (real) sense on the positive axis.
    """
    from .models import AiryChain

    t = to_mp(t)
    x = AiryChain.x_of_t(t)
    return demote(mp.sqrt(mp.pi) * mp.exp(-t / 2) * mp.power(x, mpf(1) / 4) * ref_airy(x, "bi"))


def h_from_ai(t):
    """Recessive solution ``2 sqrt(pi) e^{zeta} x^{1/4} Ai(x) ~ sum (-1)^k h_k t^-k`` times ``e^{-t}``."""
    from .models import AiryChain

    t = to_mp(t)
    x = AiryChain.x_of_t(t)
    return demote(2 * mp.sqrt(mp.pi) * mp.exp(t / 2) * mp.power(x, mpf(1) / 4) * ref_airy(x, "ai"))


# -- remainders -------------------------------------------------------------------------

def _recessive_scale(x, recessive):
    alpha, r = recessive
    x = to_mp(x)
    scale = mp.exp(-to_mp(alpha) * x)
    if r != 0:
        scale *= mp.power(x, to_mp(r))
    return scale


@with_precision
def remainder_seq(f, seq: CoeffSeq, x, n_range, recessive=(1, 0)) -> list:
    """``E_n(x) = (f(x) - sum_{k<=n} c_k x^-k) / (x^r e^{-alpha x})``.

    ``n`` is the index of the last retained term, so ``E_n`` uses
    ``eval_truncated(seq, x, n + 1)``.  ``recessive = (alpha, r)`` fixes the
    unit ``x^r e^{-alpha x}`` of the companion exponential.
    """
    x = to_mp(x)
    ns = list(n_range)
    if ns:
        seq.require(max(ns) + 1)
    guard = int(abs(to_mp(recessive[0]) * x) / mp.log(2)) + 32
    out = []
    with extra_precision(guard):
        fx = f(x)
        scale = _recessive_scale(x, recessive)
        for n in ns:
            out.append((fx - eval_truncated(seq, x, n + 1)) / scale)
    return [demote(+v) for v in out]


@dataclass
class StokesReport:
    ray: Ray
    C: object
    samples: list  # (x, n_x, E)
    convergence_rate: object
    extrapolants: list = field(default_factory=list)
    spread: object = None

    def __post_init__(self):
        radii = [abs(to_mp(x)) for x, _, _ in self.samples]
        if radii != sorted(radii):
            raise ValueError("samples must be ordered by |x|")


def _fit_constant(es, sig, ns, order):
    """Solve ``E_k = C + sigma_k sum_{m<order} D_m n_k^-m`` for ``C``."""
    size = order + 1
    A = mp.matrix(size, size)
    rhs = mp.matrix(size, 1)
    for i in range(size):
        A[i, 0] = 1
        for m in range(order):
            A[i, m + 1] = sig[i] / mpf(ns[i]) ** m
        rhs[i] = es[i]
    return mp.lu_solve(A, rhs)[0]


@with_precision
def stokes_constant(f, seq: CoeffSeq, ray: Ray, x_schedule: Sequence, g: Optional[GrowthModel] = None,
                    recessive=(1, 0), order: int = 3, tol=mpf("1e-6")) -> StokesReport:
    """Constant ``C`` with ``f - (least-term sum) -> C x^r e^{-alpha x}`` on the ray.

    ``x_schedule`` lists radii (or points on the ray).  At each point the series
    is truncated after its least term ``n_x`` and the remainder ``E`` is
    measured in recessive units.  The first omitted term, in the same units,
    is ``sigma = c_{n+1} x^{-n-1} / (x^r e^{-alpha x})``; on the axis it stays
    of order ``n^{-1/2}`` and off the axis it decays exponentially, and in both
    cases ``E = C + sigma (D_0 + D_1/n + ...)``.  ``C`` is obtained by solving
    this model through the last ``order + 1`` samples; the solves on earlier
    sub-schedules are the extrapolants, and the last two must agree within
    ``tol``.
    """
    if g is None:
        g = GrowthModel(R=1, alpha=recessive[0], r=recessive[1])
    pts = []
    for v in x_schedule:
        v = to_mp(v)
        pts.append(ray.point(v) if mp.im(v) == 0 and v > 0 and ray.theta != 0 else v)
    radii = [abs(p) for p in pts]
    if radii != sorted(radii):
        raise ValueError("x_schedule must increase along the ray")
    if len(pts) < order + 2:
        raise ValueError(f"need at least {order + 2} schedule points")
    samples, es, sig, ns = [], [], [], []
    for x in pts:
        if not ray.contains(x):
            raise ValueError(f"{x} is not on the ray")
        n = least_term_index(g, x)
        seq.require(n + 2)
        E = remainder_seq(f, seq, x, [n], recessive)[0]
        with extra_precision(int(abs(x) / mp.log(2)) + 32):
            s_next = to_mp(seq[n + 1]) * x ** (-(n + 1)) / _recessive_scale(x, recessive)
        samples.append((x, n, E))
        es.append(E)
        sig.append(+s_next)
        ns.append(n)
    extrap = []
    for end in range(order + 1, len(pts) + 1):
        lo = end - order - 1
        extrap.append(_fit_constant(es[lo:end], sig[lo:end], ns[lo:end], order))
    C = extrap[-1]
    spread = abs(extrap[-1] - extrap[-2])
    if spread > to_mp(tol):
        raise NonConvergenceError(
            f"successive extrapolants differ by {mp.nstr(spread, 5)} (tol {mp.nstr(to_mp(tol), 3)})"
        )
    # empirical decay rate of |E - C| per unit |x|
    rates = []
    for (x1, _, e1), (x2, _, e2) in zip(samples, samples[1:]):
        d1, d2 = abs(e1 - C), abs(e2 - C)
        if d1 > 0 and d2 > 0:
            rates.append(-(mp.log(d2) - mp.log(d1)) / (abs(x2) - abs(x1)))
    rate = sum(rates) / len(rates) if rates else mpf(0)
    C = demote(C)
    return StokesReport(ray=ray, C=C, samples=samples, convergence_rate=rate,
                        extrapolants=[demote(v) for v in extrap], spread=spread)


# -- the phi equation -------------------------------------------------------------------

class PhiMax(NamedTuple):
    s: float
    value: float


def _phi_max(n) -> PhiMax:
    inf = n == mp.inf or n == float("inf")
    if inf:
        def rhs(s, y):
            return [1 - s * y[0]]
        y0 = 0.0
    else:
        n = float(n)
        root = np.sqrt(n)

        def rhs(s, y):
            return [1 - s * y[0] / (1 + s / root)]
        y0 = 2.0 / (3.0 * root)
    sol = solve_ivp(rhs, (0.0, 12.0), [y0], method="DOP853", rtol=1e-13, atol=1e-15,
                    dense_output=True)
    grid = np.linspace(0.0, 12.0, 4001)
    vals = np.abs(sol.sol(grid)[0])
    i = int(np.argmax(vals))
    lo, hi = grid[max(0, i - 1)], grid[min(len(grid) - 1, i + 1)]
    res = minimize_scalar(lambda s: -abs(sol.sol(s)[0]), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return PhiMax(float(res.x), float(-res.fun))


def phi_profile(n) -> object:
    """Maximum of ``|phi|`` for ``phi' + s phi / (1 + s n^{-1/2}) = 1``, ``phi(0) = (2/3) n^{-1/2}``.

    The initial value is the leading term of the on-axis remainder at
    ``x = n``.  As ``n`` grows the maximum tends to ``a*``; ``n = inf`` gives the
    limiting equation ``phi' + s phi = 1`` with ``phi(0) = 0``.  The equation is
    integrated in double precision with an eighth-order adaptive scheme.
    """
    if not (n == mp.inf or n == float("inf")) and n < 10:
        raise DomainError("phi_profile needs n >= 10")
    return mpf(_phi_max(n).value)


def phi_argmax(n) -> object:
    return mpf(_phi_max(n).s)


# -- rational inhomogeneities --------------------------------------------------------------

@dataclass(frozen=True)
class RationalFunction:
    """``R(x) = sum_{k,j} R[k-1][j] (x - r_j)^{-k}``."""

    poles: tuple
    residues: tuple  # residues[k-1][j]

    def __post_init__(self):
        poles = tuple(self.poles)
        res = tuple(tuple(row) for row in self.residues)
        if not poles:
            raise ValueError("at least one pole is required")
        if not res or any(len(row) != len(poles) for row in res):
            raise ValueError("residues must be an m x (number of poles) matrix")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", res)

    @property
    def m(self) -> int:
        return len(self.residues)

    def terms(self):
        for k, row in enumerate(self.residues, start=1):
            for j, R in enumerate(row):
                if R != 0:
                    yield k, self.poles[j], R

    def __call__(self, x):
        x = to_mp(x)
        return sum(to_mp(R) / (x - to_mp(r)) ** k for k, r, R in self.terms())

    def laplace_density(self, t):
        """``Q(t) = sum R_kj e^{r_j t} t^{k-1} / (k-1)!``."""
        t = to_mp(t)
        return sum(to_mp(R) * mp.exp(to_mp(r) * t) * t ** (k - 1) / mp.factorial(k - 1)
                   for k, r, R in self.terms())


@dataclass
class DecompositionResult:
    """``psi = K e^{-x} Ei(x) + H(1/x) + C e^{-x}`` solves ``psi' + psi = R``."""

    K: object
    H: CoeffSeq
    C: object = 0

    def H_value(self, x):
        return eval_truncated(self.H, x, len(self.H))

    def value(self, x):
        x = to_mp(x)
        return to_mp(self.K) * ref_ei(x) + self.H_value(x) + to_mp(self.C) * mp.exp(-x)


def _check_ray(R: RationalFunction, ray: Ray):
    direction = ray.direction
    for r in R.poles:
        z = to_mp(r) / direction
        if abs(mp.im(z)) <= mpf(2) ** (-(mp.prec // 2)) * (1 + abs(z)) and mp.re(z) >= to_mp(ray.x0):
            raise PoleOnRayError(f"pole {r} lies on the ray")


@with_precision
def decompose_rational(R: RationalFunction, C=0, terms: int = 64, ray: Optional[Ray] = None) -> DecompositionResult:
    """Split the small solution of ``psi' + psi = R`` into ``K e^{-x}Ei(x)`` plus a convergent part.

    ``K = sum R_kj e^{r_j} / (k-1)!``.  Writing ``R(x) = int_0^inf e^{-xt} Q(t) dt``,
    the remaining part is ``H(1/x) = int_0^inf e^{-xt} (Q(t) - K)/(1 - t) dt``, whose
    integrand is entire in ``t``; integrating its Taylor series term by term gives
    ``h_0 = 0`` and ``h_{m+1} = m! rho_m`` with ``rho_m = -sum_{i>m} p_i`` and ``p_i``
    the Taylor coefficients of ``Q``.
    """
    if ray is not None:
        _check_ray(R, ray)
    exact = all(r == 0 for r in R.poles) and all_exact(v for row in R.residues for v in row)
    if exact:
        K = sum((Fraction(Rv) / _fact(k - 1) for k, _, Rv in R.terms()), Fraction(0))
        # Q is a polynomial: p_i = R_{i+1} / i!
        p = {k - 1: Fraction(Rv) / _fact(k - 1) for k, _, Rv in R.terms()}
        H = [Fraction(0)]
        for m in range(terms - 1):
            rho = -sum((v for i, v in p.items() if i > m), Fraction(0))
            H.append(_fact(m) * rho)
        return DecompositionResult(K, CoeffSeq(H), C)

    with extra_precision(32):
        K = sum(to_mp(Rv) * mp.exp(to_mp(r)) / mp.factorial(k - 1) for k, r, Rv in R.terms())
        items = [(k, to_mp(r), to_mp(Rv)) for k, r, Rv in R.terms()]

        def p_coeff(i):
            tot = mpf(0)
            for k, r, Rv in items:
                e = i - k + 1
                if e < 0:
                    continue
                tot += Rv * r ** e / (mp.factorial(e) * mp.factorial(k - 1))
            return tot

        eps = mpf(2) ** (-mp.prec)
        # p_i decays factorially; extend until the far tail is negligible
        vals = []
        ref = mpf(0)
        i = 0
        while True:
            v = p_coeff(i)
            vals.append(v)
            if i >= terms:
                ref = max(ref, abs(v))
                if abs(v) <= eps * ref and (ref == 0 or abs(vals[-2]) <= eps * ref * 2 ** 8 or i > terms + 4000):
                    break
                if ref == 0 and i > terms + 4:
                    break
            i += 1
        top = len(vals) - 1
        tails = [mpf(0)] * (top + 2)
        for i in range(top, -1, -1):
            tails[i] = tails[i + 1] + vals[i]
        H = [mpf(0)]
        for m in range(terms - 1):
            H.append(mp.factorial(m) * (-tails[m + 1]))
        K = demote(+K)
        H = [demote(+v) for v in H]
    return DecompositionResult(K, CoeffSeq(H), C)


def _fact(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


@with_precision
def reference_psi(R: RationalFunction, x, C=0):
    """Principal-value Laplace integral ``PV int_0^inf e^{-tx} Q(t)/(1 - t) dt + C e^{-x}``.

    The singular point is handled by folding: ``int_0^1 (g(1-u) - g(1+u))/u du``
    plus ``int_2^inf g(t)/(1-t) dt`` with ``g(t) = e^{-tx} Q(t)``.
    """
    x = to_mp(x)
    max_re = max(mp.re(to_mp(r)) for r in R.poles)
    if not mp.re(x) > max(max_re, 0):
        raise DomainError("x must lie to the right of every pole")
    with extra_precision(40):
        def g(t):
            return mp.exp(-t * x) * R.laplace_density(t)

        folded = mp.quad(lambda u: (g(1 - u) - g(1 + u)) / u, [0, mpf(1) / 2, 1])
        tail = mp.quad(lambda t: g(t) / (1 - t), [2, 4, 16, mp.inf])
        val = folded + tail + to_mp(C) * mp.exp(-x)
    return demote(+val)


@with_precision
def verify_decomposition(R: RationalFunction, d: DecompositionResult, x_grid: Sequence):
    """Largest deviation between the decomposition and the quadrature reference on the grid."""
    worst = mpf(0)
    for x in x_grid:
        ref = reference_psi(R, x, d.C)
        worst = max(worst, abs(ref - d.value(x)))
    return worst
