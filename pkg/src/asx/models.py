"""Problem types and the normalisation of second-order equations.

Second-order problems are ``y'' + a(x) y' + b(x) y = 0`` with
``a ~ sum a_k x^-k`` and ``b ~ sum b_k x^-k``.  The formal solutions behave as
``exp(lambda_i x) x^{r_i} (1 + O(1/x))`` where the ``lambda_i`` solve
``lambda^2 + a_0 lambda + b_0 = 0``.

``canonicalize`` removes the dominant exponential and power and then rotates
and rescales ``x`` so that the second exponential becomes ``e^{-x}`` on the
positive axis.  Afterwards ``a_0 = 1``, ``b_0 = b_1 = 0`` and the formal
solution with ``lambda_1 = 0`` starts ``1 + s_1/x + ...``.

First-order problems are ``y' = sum_p f_p(x) y^p`` with ``f_p ~ sum_k f_{p,k} x^-k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

from mpmath import mp, mpc, mpf

from .core import CoeffSeq, Ray
from .errors import DegenerateRootsError, InvariantError
from .numeric import (
    all_exact,
    is_exact,
    lift,
    magnitude,
    to_mp,
    with_precision,
    working_precision,
)


@dataclass(frozen=True)
class RationalEvaluator:
    """Closed form ``N(x)/D(x)`` with coefficient lists in ascending powers."""

    numerator: tuple
    denominator: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))
        if not any(c != 0 for c in self.denominator):
            raise InvariantError("closed-form denominator is identically zero")

    @staticmethod
    def _poly(cs, x):
        acc = 0
        for c in reversed(cs):
            acc = acc * x + to_mp(c)
        return acc

    def __call__(self, x):
        x = to_mp(x)
        return self._poly(self.numerator, x) / self._poly(self.denominator, x)


@dataclass(frozen=True)
class SecondOrderProblem:
    """``y'' + a(x) y' + b(x) y = 0`` on a ray, with Gevrey constant ``kappa``."""

    a: CoeffSeq
    b: CoeffSeq
    kappa: object
    ray: Ray = field(default_factory=Ray)
    a_func: Optional[Callable] = None
    b_func: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.a, CoeffSeq):
            object.__setattr__(self, "a", CoeffSeq(self.a))
        if not isinstance(self.b, CoeffSeq):
            object.__setattr__(self, "b", CoeffSeq(self.b))
        if len(self.a) == 0 and not self.a.finite:
            raise InvariantError("a needs at least a_0")
        if not magnitude(self.kappa) > 0:
            raise InvariantError("kappa must be positive")
        a0, b0 = self.a[0], self.b[0]
        a0, b0 = lift(a0, b0)
        disc = a0 * a0 - 4 * b0
        if disc == 0:
            raise DegenerateRootsError("characteristic roots coincide")
        # kappa < |a0^2 - 4 b0|^{-1/2}
        with working_precision():
            if to_mp(self.kappa) ** 2 * abs(to_mp(disc)) >= 1:
                raise InvariantError(
                    "kappa must be below |a_0^2 - 4 b_0|^(-1/2) (Gevrey bound)"
                )

    @property
    def is_canonical(self) -> bool:
        return (
            self.ray.theta == 0
            and self.a[0] != 0
            and magnitude(self.a[0]) == 1
            and self.b[0] == 0
            and self.b[1] == 0
        )


@dataclass(frozen=True)
class FirstOrderProblem:
    """``y' = sum_{p=0}^{P} f_p(x) y^p`` with ``f_p ~ sum_k f[p][k] x^-k``."""

    f: tuple
    kappa: object
    ray: Ray = field(default_factory=Ray)
    C_F: object = 1
    name: str = ""

    def __post_init__(self):
        fs = tuple(c if isinstance(c, CoeffSeq) else CoeffSeq(c) for c in self.f)
        object.__setattr__(self, "f", fs)
        if len(fs) < 2:
            raise InvariantError("need f_0 and f_1 (alpha = -f_{1,0} is undefined)")
        if len(fs[1]) == 0 and not fs[1].finite:
            raise InvariantError("f_{1,0} is missing, so alpha is undefined")
        if fs[0][0] != 0:
            raise InvariantError("f_{0,0} must vanish")
        if self.alpha == 0:
            raise InvariantError("alpha = -f_{1,0} must be nonzero")
        with working_precision():
            if not to_mp(self.kappa) > 0:
                raise InvariantError("kappa must be positive")
            if to_mp(self.kappa) * abs(to_mp(self.alpha)) >= 1:
                raise InvariantError("kappa must be below 1/|alpha|")
            phase = to_mp(self.ray.theta) + mp.arg(to_mp(self.alpha))
            phase = (phase + mp.pi) % (2 * mp.pi) - mp.pi
            if not abs(phase) < mp.pi / 2:
                raise InvariantError("arg(x alpha) must lie in (-pi/2, pi/2) on the ray")

    @property
    def P(self) -> int:
        return len(self.f) - 1

    @property
    def alpha(self):
        v = self.f[1][0]
        return -Fraction(v) if is_exact(v) else -to_mp(v)

    @property
    def r(self):
        """Power in the recessive solution ``x^r e^{-alpha x}``."""
        f01 = self.f[0][1]
        f11 = self.f[1][1]
        f20 = self.f[2][0] if self.P >= 2 else 0
        alpha, f01, f11, f20 = lift(self.alpha, f01, f11, f20)
        return f11 + 2 * f20 * f01 / alpha


@dataclass(frozen=True)
class CanonicalTransform:
    """Record of ``y(x) = e^{lambda1 x} x^{r1} Y(X)`` with ``x = scale * X``."""

    lambda1: object
    lambda2: object
    r1: object
    r2: object
    Delta: object
    scale: object
    truncated_at: Optional[int] = None

    @property
    def rho(self):
        d = self.r2 - self.r1
        return d if is_exact(d) else mp.re(d)

    def to_canonical(self, x):
        return to_mp(x) / to_mp(self.scale)

    def from_canonical(self, X):
        return to_mp(X) * to_mp(self.scale)

    def prefactor(self, x):
        x = to_mp(x)
        return mp.exp(to_mp(self.lambda1) * x) * mp.power(x, to_mp(self.r1))

    def solution(self, Y: Callable) -> Callable:
        """Map a canonical solution ``Y(X)`` back to ``y(x)``."""
        return lambda x: self.prefactor(x) * Y(self.to_canonical(x))


# -- roots and exponents --------------------------------------------------------

def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _lex_key(z):
    z = to_mp(z)
    return (mp.re(z), mp.im(z))


@with_precision
def characteristic_roots(a0, b0):
    """Roots of ``lambda^2 + a0 lambda + b0`` in lexicographic (Re, Im) order."""
    a0, b0 = lift(a0, b0)
    disc = a0 * a0 - 4 * b0
    if disc == 0:
        raise DegenerateRootsError("discriminant vanishes: no exponential splitting")
    if is_exact(disc):
        s = _exact_sqrt(disc)
        if s is not None:
            roots = [(-a0 - s) / 2, (-a0 + s) / 2]
            return tuple(sorted(roots))
        a0, b0, disc = to_mp(a0), to_mp(b0), to_mp(disc)
    s = mp.sqrt(disc if isinstance(disc, mpc) or disc > 0 else mpc(disc))
    roots = [(-a0 - s) / 2, (-a0 + s) / 2]
    roots = [r.real if isinstance(r, mpc) and r.imag == 0 else r for r in roots]
    return tuple(sorted(roots, key=_lex_key))


@with_precision
def formal_exponents(a0, a1, b1, lam):
    """``r = -(a1 lambda + b1) / (a0 + 2 lambda)``."""
    a0, a1, b1, lam = lift(a0, a1, b1, lam)
    den = a0 + 2 * lam
    if den == 0:
        raise DegenerateRootsError("a0 + 2 lambda vanishes")
    return -(a1 * lam + b1) / den


def _dominance_order(roots, theta):
    """Index of the root whose exponential dominates on the ray."""
    def key(i):
        lam = to_mp(roots[i])
        growth = mp.re(mp.expj(to_mp(theta)) * lam)
        return growth
    g0, g1 = key(0), key(1)
    tol = mpf(2) ** (-(mp.prec // 2))
    if abs(g0 - g1) > tol * (1 + abs(g0) + abs(g1)):
        return 0 if g0 > g1 else 1
    # tie: the smaller root in modulus, then lexicographic order
    m0, m1 = abs(to_mp(roots[0])), abs(to_mp(roots[1]))
    if abs(m0 - m1) > tol * (1 + m0):
        return 0 if m0 < m1 else 1
    return 0


def _clean(v, scale_ref=1):
    """Drop an imaginary part that is pure rounding noise."""
    if isinstance(v, mpc) and abs(v.imag) <= mpf(2) ** (-mp.prec + 16) * (abs(v.real) + abs(to_mp(scale_ref))):
        return v.real
    return v


@with_precision
def canonicalize(p: SecondOrderProblem, lead: Optional[int] = None):
    """Bring ``p`` to canonical form.

    ``lead`` picks which characteristic root (in lexicographic order) is
    removed; by default it is the one dominant on the ray, so that the
    other exponential becomes recessive.

    Returns ``(canonical_problem, transform)``.
    """
    roots = characteristic_roots(p.a[0], p.b[0])
    i1 = _dominance_order(roots, p.ray.theta) if lead is None else lead
    lam1, lam2 = roots[i1], roots[1 - i1]
    a0, a1, b1 = p.a[0], p.a[1], p.b[1]
    r1 = formal_exponents(a0, a1, b1, lam1)
    r2 = formal_exponents(a0, a1, b1, lam2)
    delta = lift(lam2, lam1)
    delta = delta[0] - delta[1]

    theta = p.ray.theta
    if theta == 0 and is_exact(delta):
        c = Fraction(1) / abs(delta)
    else:
        c = _clean(mp.expj(to_mp(theta)) / abs(to_mp(delta)))

    # how far the shifted coefficients are reliable
    if p.a.finite and p.b.finite:
        length = max(len(p.a), len(p.b), 3)
        finite = True
        truncated_at = None
    else:
        length = min(len(p.a) if not p.a.finite else 10**9,
                     len(p.b) if not p.b.finite else 10**9)
        length = min(length, (len(p.a) + 1) if not p.a.finite else 10**9)
        finite = False
        truncated_at = length

    exact = all_exact([lam1, r1, c] + list(p.a.coeffs) + list(p.b.coeffs))

    def conv(v):
        return Fraction(v) if exact else to_mp(v)

    lam1c, r1c, cc = conv(lam1), conv(r1), conv(c)
    new_a, new_b = [], []
    for k in range(length):
        ak = conv(p.a[k])
        if k == 0:
            ak += 2 * lam1c
        elif k == 1:
            ak += 2 * r1c
        bk = conv(p.b[k]) + lam1c * conv(p.a[k])
        if k >= 1:
            bk += r1c * conv(p.a[k - 1])
        if k == 0:
            bk += lam1c * lam1c
        elif k == 1:
            bk += 2 * lam1c * r1c
        elif k == 2:
            bk += r1c * r1c - r1c
        new_a.append(ak * cc ** (1 - k))
        new_b.append(bk * cc ** (2 - k))
    # b_0 and b_1 vanish identically after the shift; remove rounding residue
    for k in (0, 1):
        if not exact:
            ref = 1 + abs(to_mp(p.b[k])) + abs(to_mp(lam1c)) ** 2
            if abs(new_b[k]) > mpf(2) ** (-mp.prec + 32) * ref:
                raise ArithmeticError("shifted b_0/b_1 failed to vanish")
        new_b[k] = Fraction(0) if exact else mpf(0)
    if not exact:
        new_a = [_clean(v) for v in new_a]
        new_b = [_clean(v) for v in new_b]

    a_func = b_func = None
    if p.a_func is not None and p.b_func is not None:
        L1, R1, C = to_mp(lam1), to_mp(r1), to_mp(c)
        fa, fb = p.a_func, p.b_func

        def a_func(X, fa=fa):
            x = C * to_mp(X)
            return C * (fa(x) + 2 * L1 + 2 * R1 / x)

        def b_func(X, fa=fa, fb=fb):
            x = C * to_mp(X)
            phi = L1 + R1 / x
            return C * C * (fb(x) + fa(x) * phi - R1 / x ** 2 + phi * phi)

    kappa = to_mp(p.kappa) * abs(to_mp(delta)) if not (is_exact(p.kappa) and is_exact(delta)) \
        else Fraction(p.kappa) * abs(Fraction(delta))
    x0 = to_mp(p.ray.x0) * abs(to_mp(delta)) if not (is_exact(p.ray.x0) and is_exact(delta)) \
        else Fraction(p.ray.x0) * abs(Fraction(delta))
    new = SecondOrderProblem(
        a=CoeffSeq(new_a, finite=finite),
        b=CoeffSeq(new_b, finite=finite),
        kappa=kappa,
        ray=Ray(0, x0),
        a_func=a_func,
        b_func=b_func,
        name=(p.name + " (canonical)") if p.name else "",
    )
    transform = CanonicalTransform(
        lambda1=lam1, lambda2=lam2, r1=r1, r2=r2, Delta=delta, scale=c,
        truncated_at=truncated_at,
    )
    return new, transform


# -- Gevrey validation --------------------------------------------------------------

@dataclass
class GevreyReport:
    ratios: dict
    constant: object
    passed: bool
    kappa_ok: bool = True
    growth_ok: bool = True
    remainder_constant: object = None
    notes: list = field(default_factory=list)


def _bounded(ratios: Sequence, bound=None) -> bool:
    if not ratios:
        return True
    if bound is not None:
        return max(ratios) <= to_mp(bound) * (1 + mpf(2) ** (-mp.prec + 16))
    # heuristic: the last quarter may not exceed the earlier maximum
    q = max(1, len(ratios) // 4)
    head, tail = ratios[:-q], ratios[-q:]
    if not head:
        return True
    return max(tail) <= max(head) * (1 + mpf(2) ** (-mp.prec + 16))


def _series_of(p):
    if isinstance(p, SecondOrderProblem):
        return {"a": p.a, "b": p.b}
    return {f"f{i}": s for i, s in enumerate(p.f)}


def _closed_forms(p):
    if isinstance(p, SecondOrderProblem):
        out = {}
        if p.a_func is not None:
            out["a"] = p.a_func
        if p.b_func is not None:
            out["b"] = p.b_func
        return out
    return {}


@with_precision
def validate_gevrey(p, n_max: int, bound=None, grid: Optional[Sequence] = None) -> GevreyReport:
    """Check ``|coeff_n| <= const * kappa^n n!`` for ``n <= n_max``.

    With ``bound`` the constant must not exceed it; otherwise the verdict is
    that the ratios stop growing (the last quarter stays under the earlier
    maximum).  Closed-form evaluators, when present, are also compared with
    their truncated series on ``grid`` using the same Gevrey scale.
    """
    kappa = to_mp(p.kappa)
    ratios = {}
    notes = []
    passed = True
    for name, seq in _series_of(p).items():
        top = n_max if seq.finite else min(n_max, len(seq) - 1)
        if top < n_max:
            notes.append(f"{name}: only {len(seq)} coefficients available")
        rs = [abs(to_mp(seq[n])) / (kappa ** n * mp.factorial(n)) for n in range(top + 1)]
        ratios[name] = rs
        passed = passed and _bounded(rs, bound)
    growth_ok = passed
    constant = max((max(r) for r in ratios.values() if r), default=mpf(0))

    kappa_ok = True
    if isinstance(p, SecondOrderProblem):
        disc = to_mp(p.a[0]) ** 2 - 4 * to_mp(p.b[0])
        kappa_ok = kappa ** 2 * abs(disc) < 1
    else:
        kappa_ok = kappa * abs(to_mp(p.alpha)) < 1
    passed = passed and kappa_ok

    remainder_constant = None
    forms = _closed_forms(p)
    if forms and grid:
        remainder_constant = mpf(0)
        per_n = []
        for n in range(n_max + 1):
            worst = mpf(0)
            for name, fn in forms.items():
                seq = _series_of(p)[name]
                if not seq.available(n):
                    continue
                from .core import eval_truncated
                for x in grid:
                    x = to_mp(x)
                    d = abs(fn(x) - eval_truncated(seq, x, n)) * abs(x) ** n
                    worst = max(worst, d / (kappa ** n * mp.factorial(n)))
            per_n.append(worst)
        remainder_constant = max(per_n)
        if not _bounded(per_n, bound):
            passed = False
            notes.append("closed-form remainders exceed the Gevrey scale")
    return GevreyReport(ratios=ratios, constant=constant, passed=passed,
                        kappa_ok=kappa_ok, growth_ok=growth_ok, remainder_constant=remainder_constant, notes=notes)


@with_precision
def closed_form_discrepancy(p: SecondOrderProblem, grid: Sequence, n: Optional[int] = None):
    """Largest ``|a(x) - sum_{k<n} a_k x^-k|`` (and likewise for b) on ``grid``.

    For finite coefficient series ``n`` defaults to the full length, so the
    result should be rounding noise.
    """
    from .core import eval_truncated

    worst = mpf(0)
    for name, fn in _closed_forms(p).items():
        seq = _series_of(p)[name]
        terms = n if n is not None else len(seq)
        for x in grid:
            worst = max(worst, abs(fn(to_mp(x)) - eval_truncated(seq, x, terms)))
    return worst


# -- the Airy chain -------------------------------------------------------------------

AIRY_A = (Fraction(4, 3), Fraction(1, 3))
AIRY_B = (Fraction(0), Fraction(2, 9))


def airy_source_problem(kappa=Fraction(1, 2)) -> SecondOrderProblem:
    """Airy's equation after ``y = exp(2 x^{3/2}/3) g`` and ``x = s^{2/3}``.

    In the variable ``s`` the equation reads
    ``g'' + (4/3 + 1/(3s)) g' + 2/(9s) g = 0``.
    """
    return SecondOrderProblem(
        a=CoeffSeq(AIRY_A, finite=True),
        b=CoeffSeq(AIRY_B, finite=True),
        kappa=kappa,
        ray=Ray(0, 1),
        a_func=RationalEvaluator((1, 4), (0, 3)),
        b_func=RationalEvaluator((2,), (0, 9)),
        name="airy",
    )


@dataclass(frozen=True)
class AiryChain:
    """Substitutions linking Airy's ``y'' = x y`` to the canonical h-equation.

    ``y = exp(2 x^{3/2}/3) g``, ``x = s^{2/3}``, ``g = s^{-1/6} h`` and
    ``s = 3 t / 4``.  Hence ``t = (4/3) x^{3/2}`` and
    ``y = exp(t/2) x^{-1/4} (3/4)^{-1/6} h(t)`` up to the overall constant.
    """

    transform: CanonicalTransform

    @staticmethod
    def t_of_x(x):
        x = to_mp(x)
        return mpf(4) / 3 * mp.power(x, mpf(3) / 2)

    @staticmethod
    def x_of_t(t):
        t = to_mp(t)
        return mp.power(mpf(3) * t / 4, mpf(2) / 3)

    @staticmethod
    def zeta(x):
        x = to_mp(x)
        return mpf(2) / 3 * mp.power(x, mpf(3) / 2)

    @classmethod
    def dominant_prefactor(cls, x):
        """``exp(zeta) x^{-1/4}`` with ``zeta = (2/3) x^{3/2} = t/2``."""
        x = to_mp(x)
        return mp.exp(cls.zeta(x)) * mp.power(x, -mpf(1) / 4)

    @staticmethod
    def x_series_coefficients(h: CoeffSeq) -> CoeffSeq:
        """Coefficients ``f_k`` of ``sum f_k x^{-3k/2}`` equal to ``sum h_k t^-k``.

        Since ``t^-k = (3/4)^k x^{-3k/2}``, ``f_k = (3/4)^k h_k``.
        """
        return CoeffSeq([Fraction(3, 4) ** k * c if is_exact(c) else (mpf(3) / 4) ** k * to_mp(c)
                         for k, c in enumerate(h)], finite=h.finite)


def airy_chain(kappa=Fraction(1, 2)):
    """The canonical h-equation together with its link to Airy's equation."""
    src = airy_source_problem(kappa)
    prob, transform = canonicalize(src)
    prob = replace(prob, name="h-equation")
    return prob, AiryChain(transform)
