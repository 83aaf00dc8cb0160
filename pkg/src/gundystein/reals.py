"""Certified comparisons for quantities involving e, exp and log.

A :class:`Real` is a lazily evaluated expression that can produce an
outward-rounded interval enclosure at any binary precision (via
``mpmath``'s interval contexts).  Comparisons against exact rationals and
other reals escalate the precision until the enclosures separate, so the
answer is always sound.  Equal irrational values never separate; after
``MAX_PREC`` bits an :class:`UndecidedComparison` is raised rather than a
guess being returned.
"""

from __future__ import annotations

import math
from functools import lru_cache

from mpmath.ctx_iv import MPIntervalContext

START_PREC = 64
MAX_PREC = 8192


class UndecidedComparison(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def _ctx(prec: int) -> MPIntervalContext:
    ctx = MPIntervalContext()
    ctx.prec = prec
    return ctx


def _to_iv(x, ctx):
    if isinstance(x, Real):
        return x.interval(ctx)
    if isinstance(x, float):
        return ctx.mpf(x)
    num, den = x.numerator, x.denominator
    if den == 1:
        return ctx.mpf(int(num))
    return ctx.mpf(int(num)) / ctx.mpf(int(den))


def _approx(x) -> float:
    if isinstance(x, Real):
        return x.approx
    return float(x)


class Real:
    """Interval-backed real expression."""

    __slots__ = ("_fn", "approx", "_cache")

    def __init__(self, fn, approx: float):
        self._fn = fn
        self.approx = approx
        self._cache = {}

    @classmethod
    def e(cls) -> "Real":
        return cls(lambda ctx: ctx.e, math.e)

    @classmethod
    def const(cls, x) -> "Real":
        return cls(lambda ctx: _to_iv(x, ctx), float(x))

    def interval(self, ctx):
        iv = self._cache.get(ctx.prec)
        if iv is None:
            iv = self._fn(ctx)
            self._cache[ctx.prec] = iv
        return iv

    # arithmetic ---------------------------------------------------------
    def _bin(self, other, op, fop):
        a, b = self, other
        return Real(lambda ctx: op(_to_iv(a, ctx), _to_iv(b, ctx)), fop(_approx(a), _approx(b)))

    def _rbin(self, other, op, fop):
        a, b = other, self
        return Real(lambda ctx: op(_to_iv(a, ctx), _to_iv(b, ctx)), fop(_approx(a), _approx(b)))

    def __add__(self, o):
        return self._bin(o, lambda x, y: x + y, lambda x, y: x + y)

    def __radd__(self, o):
        return self._rbin(o, lambda x, y: x + y, lambda x, y: x + y)

    def __sub__(self, o):
        return self._bin(o, lambda x, y: x - y, lambda x, y: x - y)

    def __rsub__(self, o):
        return self._rbin(o, lambda x, y: x - y, lambda x, y: x - y)

    def __mul__(self, o):
        return self._bin(o, lambda x, y: x * y, lambda x, y: x * y)

    def __rmul__(self, o):
        return self._rbin(o, lambda x, y: x * y, lambda x, y: x * y)

    def __truediv__(self, o):
        return self._bin(o, lambda x, y: x / y, lambda x, y: x / y)

    def __rtruediv__(self, o):
        return self._rbin(o, lambda x, y: x / y, lambda x, y: x / y)

    def __neg__(self):
        a = self
        return Real(lambda ctx: -a.interval(ctx), -a.approx)

    def __pow__(self, k: int):
        a = self
        return Real(lambda ctx: a.interval(ctx) ** k, a.approx ** k)

    def __float__(self) -> float:
        return self.approx

    def __repr__(self) -> str:
        return f"Real(~{self.approx!r})"

    # comparisons --------------------------------------------------------
    def compare(self, other) -> int:
        """Return -1, 0 never, or +1: the certified sign of ``self - other``."""
        return compare(self, other)

    def __lt__(self, o):
        return compare(self, o) < 0

    def __le__(self, o):
        return compare(self, o) < 0

    def __gt__(self, o):
        return compare(self, o) > 0

    def __ge__(self, o):
        return compare(self, o) > 0

    __hash__ = None


def exp(x) -> Real:
    return Real(lambda ctx: ctx.exp(_to_iv(x, ctx)), math.exp(_approx(x)))


def log(x) -> Real:
    return Real(lambda ctx: ctx.log(_to_iv(x, ctx)), math.log(_approx(x)))


def compare(a, b) -> int:
    """Certified sign of ``a - b`` where at least one side may be a Real.

    Exact equality can only be certified when both sides are rational; for
    an irrational expression the enclosures must separate.
    """
    if not isinstance(a, Real) and not isinstance(b, Real):
        return (a > b) - (a < b)
    prec = START_PREC
    while prec <= MAX_PREC:
        ctx = _ctx(prec)
        x, y = _to_iv(a, ctx), _to_iv(b, ctx)
        if x.b < y.a:
            return -1
        if x.a > y.b:
            return 1
        prec *= 2
    raise UndecidedComparison(f"cannot separate {_approx(a)!r} and {_approx(b)!r}")


def certified_le(a, b) -> bool:
    """True iff ``a <= b`` is certified; ``a == b`` counts only for rationals."""
    if not isinstance(a, Real) and not isinstance(b, Real):
        return a <= b
    return compare(a, b) < 0
