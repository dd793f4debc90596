"""Least-term truncation, optimal weights and the sup statistic.

For a series whose coefficients grow like ``exp(G(n))`` the terms
``|c_n x^-n|`` are smallest near the root ``s_x`` of ``G'(s) = log|x|``.
Truncating there leaves an error of the size of the recessive exponential,
and the constant in front of it is governed by the universal number
``a* = sqrt(2) max D`` (Dawson) on the Stokes line and by ``a(theta)`` away
from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from mpmath import mp, mpf

from .core import CoeffSeq, Ray, a_star, eval_truncated, gamma_guarded
from .errors import DomainError, RangeError, TooSmallError
from .formal import GrowthModel
from .numeric import extra_precision, to_mp, with_precision, working_precision

DEFAULT_B = 10


# -- truncation orders -------------------------------------------------------------

@with_precision
def least_term_point(g: GrowthModel, x):
    """Root ``s_x`` of ``gamma psi(s + rho) = log|alpha x|``."""
    target = mp.log(abs(to_mp(g.alpha) * to_mp(x))) / to_mp(g.gamma)
    rho = to_mp(g.rho)
    # psi increases on (0, inf); bracket the root in s + rho
    lo = mpf(2) ** -20
    if mp.digamma(lo) >= target:
        raise TooSmallError("|x| too small: no least term")
    hi = mpf(2)
    while mp.digamma(hi) < target:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if mp.digamma(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < mpf(2) ** -40 * hi:
            break
    u = (lo + hi) / 2
    for _ in range(20):  # Newton polish with the trigamma function
        du = (mp.digamma(u) - target) / mp.psi(1, u)
        u -= du
        if abs(du) < mpf(2) ** (-mp.prec + 8) * u:
            break
    return u - rho


@with_precision
def least_term_index(g: GrowthModel, x, rule: str = "growth") -> int:
    """Truncation order ``n_x`` of the smallest term.

    ``rule="growth"`` floors the root of ``G'(s) = log|x|``; ``rule="transseries"``
    uses ``floor(|x Delta|)`` as for ODE solutions.  Orders below 2 are
    rejected with ``TooSmallError``: there the least term is not separated
    from the first terms and truncation carries no information.
    """
    if rule == "transseries":
        n = int(mp.floor(abs(to_mp(x) * to_mp(g.alpha))))
        if n < 2:
            raise TooSmallError("|x Delta| below 2")
        return n
    if rule != "growth":
        raise ValueError(f"unknown rule {rule!r}")
    s = least_term_point(g, x)
    if s < 2:
        raise TooSmallError(f"least-term point s_x = {mp.nstr(s, 5)} is below 2")
    return int(mp.floor(s))


def flanking_from_point(s_x, gamma=1, prec: Optional[int] = None):
    """``floor(s_x -+ sqrt(s_x / gamma) / a*)``."""
    with working_precision(prec):
        s_x, gamma = to_mp(s_x), to_mp(gamma)
        half = mp.sqrt(s_x / gamma) / a_star()
        return int(mp.floor(s_x - half)), int(mp.floor(s_x + half))


@with_precision
def flanking_indices(x, gamma=1, g: Optional[GrowthModel] = None):
    """Orders ``n_-, n_+`` where the on-axis sup statistic is attained.

    Without a growth model the factorial law ``G = gamma log Gamma(s)`` is used.
    """
    if g is None:
        g = GrowthModel(R=1, gamma=gamma)
    s = least_term_point(g, x)
    if s < 2:
        raise TooSmallError(f"least-term point s_x = {mp.nstr(s, 5)} is below 2")
    return flanking_from_point(s, g.gamma)


# -- weights -----------------------------------------------------------------------

@with_precision
def on_stokes_line(theta, alpha) -> bool:
    """True when ``e^{i theta} alpha`` is real and positive, within ``2^{-p/2}``."""
    z = mp.expj(to_mp(theta)) * to_mp(alpha)
    tol = mpf(2) ** (-(mp.prec // 2)) * abs(z)
    return mp.re(z) > 0 and abs(mp.im(z)) <= tol


@with_precision
def optimal_weight(g: GrowthModel, C, on_stokes: bool, B, k: int, component: int = 1):
    """``|C| (A sqrt(k) + B) Gamma(k +- rho) |Delta|^-k`` with ``A = a* |R|`` on the Stokes line.

    ``component`` selects the sign of ``rho``: ``+`` for the first solution,
    ``-`` for the companion.
    """
    B = to_mp(B)
    if not B > 0:
        raise ValueError("B must be positive")
    C = abs(to_mp(C))
    if C == 0:
        return mpf(0)
    A = a_star() * abs(to_mp(g.R)) if on_stokes else mpf(0)
    rho = to_mp(g.rho) if component == 1 else -to_mp(g.rho)
    return C * (A * mp.sqrt(k) + B) * gamma_guarded(k + rho) * abs(to_mp(g.Delta)) ** (-k)


@with_precision
def a_theta(theta):
    """``(1 + 1/|sin(theta/2)|) / 2``, the off-axis analogue of ``a*``.

    This is the value for angles incommensurate with ``pi``; for rational
    multiples of ``pi`` the optimal constant is marginally smaller.
    """
    theta = to_mp(theta)
    if theta == 0:
        raise DomainError("a_theta is undefined on the axis; use the sqrt(n) law")
    if not -mp.pi < theta <= mp.pi:
        raise DomainError("theta must lie in (-pi, pi]")
    return (1 + 1 / abs(mp.sin(theta / 2))) / 2


# -- the sup statistic -------------------------------------------------------------

@dataclass
class SupResult:
    value: object
    argmax_K: int
    n_x: int
    profile: dict

    def __iter__(self):
        return iter((self.value, self.argmax_K))


def _smallest_term(terms: Sequence, upto: int) -> int:
    # equal terms (up to rounding) resolve to the smaller index
    best, idx = None, None
    shrink = 1 - mpf(2) ** (-(mp.prec // 2))
    for n in range(1, upto + 1):
        t = abs(terms[n])
        if t == 0:
            continue
        if best is None or t < best * shrink:
            best, idx = t, n
    return idx


@with_precision
def sup_statistic(seq: CoeffSeq, x, k0: int = 1, theta=None,
                  g: Optional[GrowthModel] = None) -> SupResult:
    """Brute-force ``sup_K (K+k0)^{-1/2} |x|^K / |c_K| |sum_{j=n_x}^{K} c_j x^-j|``.

    Sums with ``K < n_x`` follow the convention ``sum_{j=n}^{K} = -sum_{j=K}^{n}``.
    Off the axis (``theta != 0``) the ``(K+k0)^{-1/2}`` factor is dropped.
    ``n_x`` comes from ``g`` when given, else it is the index of the
    smallest term (the smaller index on ties).
    """
    if k0 < 0:
        raise ValueError("k0 must be nonnegative")
    x = to_mp(x)
    theta = mp.arg(x) if theta is None else to_mp(theta)
    on_axis = theta == 0
    # terms c_j x^-j computed with enough headroom to form tails without loss
    upto = len(seq) - 1
    z = 1 / x
    terms = [mpf(0)] * (upto + 1)
    p = mpf(1)
    for j in range(upto + 1):
        c = seq[j]
        terms[j] = to_mp(c) * p if c != 0 else mpf(0)
        p *= z
    if g is not None:
        n_x = least_term_index(g, x)
    else:
        n_x = _smallest_term(terms, upto)
    if n_x is None or 2 * n_x > upto:
        raise RangeError(f"series must reach K = 2 n_x, have {upto}")
    best, arg = mpf(-1), None
    profile = {}
    # forward: K >= n_x, S_K = sum_{j=n_x}^{K}
    S = mpf(0)
    for K in range(n_x, 2 * n_x + 1):
        S += terms[K]
        if terms[K] == 0:
            continue
        v = abs(S) / abs(terms[K])
        if on_axis:
            v /= mp.sqrt(K + k0)
        profile[K] = v
        if v > best:
            best, arg = v, K
    # backward: K < n_x, S_K = -sum_{j=K}^{n_x}
    S = terms[n_x]
    for K in range(n_x - 1, 0, -1):
        S += terms[K]
        if terms[K] == 0:
            continue
        v = abs(S) / abs(terms[K])
        if on_axis:
            v /= mp.sqrt(K + k0)
        profile[K] = v
        if v > best:
            best, arg = v, K
    return SupResult(best, arg, n_x, profile)


# -- least-term summation -------------------------------------------------------------

class LeastTermSum(NamedTuple):
    value: object
    bound: object


@with_precision
def sum_least_term(seq: CoeffSeq, g: GrowthModel, x, C=1, B=DEFAULT_B,
                   on_stokes: Optional[bool] = None, rule: str = "growth") -> LeastTermSum:
    """Partial sum through the least term and the optimal-weight error bound.

    ``value = sum_{k<=n_x} s_k x^-k``; ``bound = w(n_x + 1) |x|^{-(n_x+1)}`` with
    ``w`` the optimal weight.  The bound is in units of the series' own
    scale (the prefactor multiplying the series).
    """
    n = least_term_index(g, x, rule=rule)
    seq.require(n + 1)
    x = to_mp(x)
    if on_stokes is None:
        on_stokes = on_stokes_line(mp.arg(x), g.alpha)
    value = eval_truncated(seq, x, n + 1)
    w = optimal_weight(g, C, on_stokes, B, n + 1)
    return LeastTermSum(value, w * abs(x) ** (-(n + 1)))


# -- eta ------------------------------------------------------------------------------

@with_precision
def eta_profile(f, seq: CoeffSeq, ray: Ray, n_max: int, grid: Sequence, g: Optional[GrowthModel] = None,
                n_min: int = 1) -> dict:
    """``rho_n = sup_x |f - sum_{j<=n} c_j x^-j| |x|^{n+1} / (a* gamma^{-1/2} |c_{n+1}|)``.

    ``eta(B) = max_n rho_n / (sqrt(n) + B)`` then follows for any ``B`` without
    re-sampling (see :func:`eta_from_profile`).
    """
    seq.require(n_max + 2)
    gamma = to_mp(g.gamma) if g is not None else mpf(1)
    pts = [to_mp(x) for x in grid]
    for x in pts:
        if not ray.contains(x):
            raise ValueError(f"grid point {x} not on the ray")
    alpha = abs(to_mp(g.alpha)) if g is not None else mpf(1)
    scale = a_star() / mp.sqrt(gamma)
    out = {n: mpf(0) for n in range(n_min, n_max + 1) if seq[n + 1] != 0}
    for x in pts:
        # the remainder can be ~exp(-|alpha x|) relative to f, so add guard bits
        guard = int(alpha * abs(x) / mp.log(2)) + 32
        with extra_precision(guard):
            fx = f(x)
            z = 1 / x
            partial = mpf(0)
            p = mpf(1)
            for j in range(0, n_max + 2):
                c = seq[j]
                term = to_mp(c) * p if c != 0 else 0
                if j >= 1 and j - 1 >= n_min and (j - 1) in out:
                    n = j - 1
                    ratio = abs(fx - partial) / abs(term) / scale
                    if ratio > out[n]:
                        out[n] = +ratio
                partial += term
                p *= z
    return out


def eta_from_profile(profile: dict, B) -> object:
    B = to_mp(B)
    return max(v / (mp.sqrt(n) + B) for n, v in profile.items())


def smallest_B(profile: dict, eta=1) -> object:
    """Least ``B >= 0`` with ``eta_from_profile(profile, B) <= eta``."""
    eta = to_mp(eta)
    return max(mpf(0), max(v / eta - mp.sqrt(n) for n, v in profile.items()))


@with_precision
def eta_check(f, seq: CoeffSeq, g: GrowthModel, ray: Ray, B, n_max: int, grid: Sequence,
              n_min: int = 1):
    """Smallest ``eta`` making the optimal-weight inequality hold on the grid.

    Grid maxima under-estimate the suprema, so the value is a lower bound.
    """
    prof = eta_profile(f, seq, ray, n_max, grid, g=g, n_min=n_min)
    return eta_from_profile(prof, B)
