"""Series primitives: coefficient sequences, rays, partial sums, weights.

The weight of a function ``f`` against a formal series ``sum s_k x^-k`` on a
ray is ``w_f(n) = sup |x|^n |f(x) - sum_{k<n} s_k x^-k|``.  Only grid maxima are
computable, so every weight produced here is a lower bound and is flagged as
such.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from mpmath import mp, mpc, mpf

from .errors import DomainError, PoleError, RangeError
from .numeric import (
    all_exact,
    current_precision,
    extra_precision,
    is_exact,
    to_mp,
    with_precision,
    working_precision,
)

Sampler = Callable[[object], object]


@dataclass(frozen=True)
class CoeffSeq:
    """Prefix ``s_0..s_N`` of a formal series in ``1/x``.

    With ``finite=True`` the series is a polynomial in ``1/x`` and every index
    past the stored prefix reads as an exact zero.
    """

    coeffs: tuple
    finite: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        if isinstance(k, slice):
            return self.coeffs[k]
        if k < 0:
            raise RangeError(f"negative coefficient index {k}")
        if k < len(self.coeffs):
            return self.coeffs[k]
        if self.finite:
            return 0
        raise RangeError(f"coefficient {k} requested, only {len(self.coeffs)} available")

    def __iter__(self):
        return iter(self.coeffs)

    def available(self, n: int) -> bool:
        return self.finite or n <= len(self.coeffs)

    def require(self, n: int) -> None:
        """Raise unless indices ``0..n-1`` are defined."""
        if not self.available(n):
            raise RangeError(f"need {n} coefficients, only {len(self.coeffs)} available")

    @property
    def exact(self) -> bool:
        return all_exact(self.coeffs)

    def as_mp(self) -> list:
        return [to_mp(c) for c in self.coeffs]

    def nonzero_indices(self) -> list[int]:
        return [k for k, c in enumerate(self.coeffs) if c != 0]

    @classmethod
    def of(cls, values: Iterable, finite: bool = False) -> "CoeffSeq":
        return cls(tuple(values), finite=finite)


@dataclass(frozen=True)
class Ray:
    """The ray ``{x : e^{-i theta} x > x0}``."""

    theta: object = 0
    x0: object = 1

    def __post_init__(self):
        theta = self.theta
        if not is_exact(theta):
            theta = to_mp(theta)
        if not (-mp.pi < to_mp(theta) <= mp.pi):
            raise DomainError(f"ray angle {theta} outside (-pi, pi]")
        x0 = self.x0 if is_exact(self.x0) else to_mp(self.x0)
        if not x0 > 0:
            raise DomainError("ray start x0 must be positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x0", x0)

    @property
    def direction(self):
        if self.theta == 0:
            return mpf(1)
        return mp.expjpi(to_mp(self.theta) / mp.pi)

    def point(self, radius):
        """The point at distance ``radius`` from the origin."""
        if self.theta == 0:
            return to_mp(radius)
        return to_mp(radius) * self.direction

    def contains(self, x, rel_tol=None) -> bool:
        x = to_mp(x)
        if rel_tol is None:
            rel_tol = mpf(2) ** (-(mp.prec // 2))
        r = abs(x)
        if r < to_mp(self.x0) * (1 - rel_tol):
            return False
        return abs(x - self.point(r)) <= rel_tol * r


@dataclass
class WeightProfile:
    """Samples ``n -> w(n)``, with the weight-law parameters when known."""

    samples: dict
    a_star: object
    A: object = None
    B: object = None
    grid_lower_bound: bool = True

    def __post_init__(self):
        for n, w in self.samples.items():
            if w < 0:
                raise ValueError(f"negative weight at n={n}")


# -- special functions --------------------------------------------------------

@with_precision
def gamma_guarded(z):
    """Gamma function with the left half-plane replaced by 1.

    Returns ``Gamma(z)`` for ``Re z > -1`` and ``1`` for ``Re z <= -1``; the
    pole at ``z = 0`` is reported as an error rather than papered over.
    """
    z = to_mp(z)
    if mp.re(z) <= -1:
        return mpf(1)
    if z == 0:
        raise PoleError("Gamma has a pole at 0")
    return mp.gamma(z)


@with_precision
def digamma_real(s):
    s = to_mp(s)
    if isinstance(s, mpc) or s <= 0:
        raise DomainError(f"digamma_real needs a positive real argument, got {s}")
    return mp.digamma(s)


# -- partial sums and weights -------------------------------------------------

@with_precision
def eval_truncated(seq: CoeffSeq, x, n: int):
    """``sum_{k<n} s_k x^-k`` by Horner's rule in ``1/x``."""
    if n < 0:
        raise RangeError("number of terms must be nonnegative")
    seq.require(n)
    x = to_mp(x)
    if x == 0:
        raise DomainError("partial sums are undefined at x = 0")
    if n == 0:
        return mpf(0)
    z = 1 / x
    acc = mpf(0)
    for k in range(n - 1, -1, -1):
        c = seq[k]
        acc = acc * z + (to_mp(c) if c != 0 else 0)
    return acc


def _check_grid(ray: Ray, grid: Sequence) -> list:
    if not grid:
        raise ValueError("grid must be non-empty")
    pts = [to_mp(x) for x in grid]
    for x in pts:
        if not ray.contains(x):
            raise ValueError(f"grid point {x} is not on the ray")
    return pts


@with_precision
def weight_transform(f: Sampler, seq: CoeffSeq, ray: Ray, n: int, grid: Sequence):
    """Grid maximum of ``|x|^n |f(x) - sum_{k<n} s_k x^-k|``.

    This under-estimates the supremum over the ray; refining the grid can
    only increase it.
    """
    pts = _check_grid(ray, grid)
    best = mpf(0)
    for x in pts:
        # the difference is tiny compared to f, so evaluate it with guard bits
        guard = int(n * max(0, mp.log(abs(x), 2))) + 32
        with extra_precision(guard):
            d = abs(f(x) - eval_truncated(seq, x, n)) * abs(x) ** n
        best = max(best, +d)
    return best


def weight_profile(f: Sampler, seq: CoeffSeq, ray: Ray, ns: Iterable[int], grid: Sequence,
                   prec: int | None = None) -> WeightProfile:
    with working_precision(prec):
        samples = {int(n): weight_transform(f, seq, ray, n, grid) for n in ns}
        return WeightProfile(samples=samples, a_star=a_star())


def ray_grid(ray: Ray, r_max, density: int = 8, r_min=None) -> list:
    """Geometric grid on the ray from ``r_min`` (default x0) to ``r_max``.

    ``density`` is the number of points per e-fold of ``|x|``.
    """
    with working_precision():
        r = to_mp(r_min if r_min is not None else ray.x0)
        r_max = to_mp(r_max)
        q = mp.exp(mpf(1) / density)
        pts = []
        while r <= r_max * (1 + mpf(10) ** -20):
            pts.append(ray.point(r))
            r *= q
        return pts


# -- Dawson function and a* -----------------------------------------------------

def _dawson_series(x):
    # alternating Maclaurin series sum (-1)^k 2^k x^{2k+1} / (2k+1)!!
    x2 = x * x
    term = x
    total = x
    k = 0
    eps = mpf(2) ** (-mp.prec)
    while abs(term) > eps * abs(total):
        k += 1
        term = -term * 2 * x2 / (2 * k + 1)
        total += term
    return total


def _dawson_positive(x):
    # e^{-x^2} sum x^{2k+1} / (k! (2k+1)): every term positive
    x2 = x * x
    power = x  # x^{2k+1}/k!
    total = x
    k = 0
    eps = mpf(2) ** (-mp.prec)
    while True:
        k += 1
        power = power * x2 / k
        term = power / (2 * k + 1)
        total += term
        if term < eps * total and k > x2:
            break
    return mp.exp(-x2) * total


@with_precision
def dawson(x):
    """Dawson's integral ``e^{-x^2} int_0^x e^{t^2} dt`` for real ``x``."""
    x = to_mp(x)
    if x < 0:
        return -dawson(-x)
    if x == 0:
        return mpf(0)
    if x <= mpf(3) / 2:
        with extra_precision(int(2 * x * x / mp.log(2)) + 16):
            return +_dawson_series(x)
    with extra_precision(16):
        return +_dawson_positive(x)


@functools.lru_cache(maxsize=16)
def _dawson_max(bits: int):
    with working_precision(bits + 20):
        # golden section on D(x) over a bracket containing the single maximum
        lo, hi = mpf("0.5"), mpf("1.5")
        g = (mp.sqrt(5) - 1) / 2
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        fc, fd = dawson(c), dawson(d)
        while hi - lo > mpf(10) ** -12:
            if fc > fd:
                hi, d, fd = d, c, fc
                c = hi - g * (hi - lo)
                fc = dawson(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + g * (hi - lo)
                fd = dawson(d)
        x = (lo + hi) / 2
        # Newton on D'(x) = 1 - 2 x D(x); at the root D'' = -2 D
        for _ in range(60):
            dx = (1 - 2 * x * dawson(x)) / (2 * dawson(x))
            x += dx
            if abs(dx) < mpf(2) ** (-bits - 8):
                break
        return x, dawson(x)


def dawson_max(prec: int | None = None):
    """Location and value ``(x*, D(x*))`` of the maximum of Dawson's integral."""
    bits = prec or current_precision()
    x, d = _dawson_max(bits)
    with working_precision(bits):
        return +x, +d


def a_star(prec: int | None = None):
    """``sqrt(2) * max D``, the universal constant of on-axis optimal weights."""
    bits = prec or current_precision()
    _, d = _dawson_max(bits)
    with working_precision(bits):
        return mp.sqrt(2) * d


def fraction_or_mp(v):
    """Keep exact values exact, round everything else to the working precision."""
    return Fraction(v) if is_exact(v) else to_mp(v)
