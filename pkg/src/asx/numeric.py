"""Precision control and scalar conversions.

All arithmetic runs on mpmath numbers (``mpf``/``mpc``) or, when every input
is rational, on :class:`fractions.Fraction`.  The working precision is a
binary bit count.  Public operations accept ``prec=`` and otherwise inherit
the precision of the enclosing :func:`working_precision` block, falling back
to the process default (256 bits, or ``ASX_PRECISION_BITS``).

mpmath keeps its precision in a module-global context, so two threads that
request different precisions at the same time will interfere.  Run
concurrent work in separate processes.
"""

from __future__ import annotations

import functools
import os
from contextlib import contextmanager
from contextvars import ContextVar
from fractions import Fraction
from numbers import Rational

from mpmath import mp, mpc, mpf

from .errors import DomainError

DEFAULT_PRECISION = 256
MIN_PRECISION = 64

_active: ContextVar[int | None] = ContextVar("asx_precision", default=None)
_default = [DEFAULT_PRECISION]


def _env_default() -> int | None:
    raw = os.environ.get("ASX_PRECISION_BITS")
    if not raw:
        return None
    return int(raw)


def check_bits(bits: int) -> int:
    bits = int(bits)
    if bits < MIN_PRECISION:
        raise DomainError(f"precision must be at least {MIN_PRECISION} bits, got {bits}")
    return bits


def set_default_precision(bits: int) -> None:
    _default[0] = check_bits(bits)


def current_precision() -> int:
    """Precision of the innermost active block, else the process default."""
    bits = _active.get()
    if bits is not None:
        return bits
    env = _env_default()
    return check_bits(env) if env is not None else _default[0]


@contextmanager
def working_precision(bits: int | None = None):
    """Run the body at ``bits`` of binary precision (inherit when None)."""
    bits = check_bits(bits) if bits is not None else current_precision()
    token = _active.set(bits)
    try:
        with mp.workprec(bits):
            yield bits
    finally:
        _active.reset(token)


@contextmanager
def extra_precision(guard: int):
    """Raise the current precision by ``guard`` bits."""
    with working_precision(current_precision() + max(0, int(guard))) as bits:
        yield bits


def with_precision(func):
    """Give ``func`` a keyword-only ``prec`` argument that scopes its body."""

    @functools.wraps(func)
    def wrapper(*args, prec: int | None = None, **kwargs):
        with working_precision(prec):
            return func(*args, **kwargs)

    return wrapper


# -- scalars -----------------------------------------------------------------

def is_exact(v) -> bool:
    return isinstance(v, (int, Rational)) and not isinstance(v, bool)


def all_exact(values) -> bool:
    return all(is_exact(v) for v in values)


def to_mp(v):
    """Convert ints, Fractions, floats, complex, strings and mp types."""
    if isinstance(v, (mpf, mpc)):
        return +v  # rounds to the working precision
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, int):
        return mpf(v)
    if isinstance(v, Rational):
        return mpf(v.numerator) / v.denominator
    if isinstance(v, float):
        return mpf(v)
    if isinstance(v, complex):
        return mpc(v.real, v.imag)
    if isinstance(v, str):
        return parse_scalar(v)
    if isinstance(v, (tuple, list)) and len(v) == 2:
        re, im = to_mp(v[0]), to_mp(v[1])
        return re if im == 0 else mpc(re, im)
    return mp.mpmathify(v)


def lift(*values):
    """Return the values as Fractions when all are rational, else as mp."""
    if all_exact(values):
        return tuple(Fraction(v) for v in values)
    return tuple(to_mp(v) for v in values)


def parse_scalar(text: str):
    """Parse ``"p/q"`` exactly and decimal strings at the working precision."""
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return Fraction(int(text))
    except ValueError:
        pass
    return mpf(text)


def real_part(v):
    if is_exact(v):
        return v
    return mp.re(v)


def imag_part(v):
    if is_exact(v):
        return 0
    return mp.im(v)


def magnitude(v):
    if is_exact(v):
        return abs(Fraction(v))
    return abs(v)


def demote(v):
    """Return a real mpf when an mpc has an exactly zero imaginary part."""
    if isinstance(v, mpc) and v.imag == 0:
        return v.real
    return v


def eps_bits(bits: int | None = None):
    return mpf(2) ** (-(bits if bits is not None else mp.prec))
