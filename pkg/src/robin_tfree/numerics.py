"""Outward-rounded interval arithmetic on top of MPFR (via gmpy2).

Every endpoint is an ``mpfr`` computed in an explicit round-down or round-up
context, so the true real value of an expression always lies inside the
returned :class:`Interval`. MPFR rounds ``log``, ``exp``, ``sqrt`` and ``pow``
correctly in every direction, which is what makes the enclosures rigorous.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import DomainError

DEFAULT_PRECISION = int(os.environ.get("ROBIN_TFREE_PRECISION", "100"))

_ZERO = mpfr(0)


@lru_cache(maxsize=None)
def _contexts(prec: int):
    if prec < 2:
        raise ValueError(f"precision must be at least 2 bits, got {prec}")
    down = gmpy2.context(precision=prec, round=gmpy2.RoundDown)
    up = gmpy2.context(precision=prec, round=gmpy2.RoundUp)
    return down, up


def _exact(value):
    """Convert an exact scalar to a gmpy2 type without rounding."""
    if isinstance(value, (mpz, mpq)) or type(value) is type(_ZERO):
        return value
    if isinstance(value, bool):
        return mpz(int(value))
    if isinstance(value, int):
        return mpz(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, Rational):
        return mpq(int(value.numerator), int(value.denominator))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite value {value!r}")
        n, d = value.as_integer_ratio()
        return mpq(n, d)
    if isinstance(value, str):
        f = Fraction(value.replace("_", ""))
        return mpq(f.numerator, f.denominator)
    if hasattr(value, "__index__"):
        return mpz(int(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact value")


def _round_down(ctx, v):
    if type(v) is type(_ZERO):
        return ctx.plus(v)
    return ctx.add(_ZERO, v)


class Interval:
    """Closed interval ``[lo, hi]`` with ``mpfr`` endpoints.

    Instances are immutable. Binary operations run at the larger of the two
    operand precisions; plain numbers (int, Fraction, float, decimal string)
    are promoted exactly and then rounded outward.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None, prec: int | None = None):
        prec = DEFAULT_PRECISION if prec is None else prec
        down, up = _contexts(prec)
        lo_x = _exact(lo)
        hi_x = lo_x if hi is None else _exact(hi)
        lo_r = _round_down(down, lo_x)
        hi_r = _round_down(up, hi_x)
        if gmpy2.is_nan(lo_r) or gmpy2.is_nan(hi_r):
            raise DomainError("NaN endpoint")
        if lo_r > hi_r:
            raise ValueError(f"empty interval [{lo_r}, {hi_r}]")
        object.__setattr__(self, "lo", lo_r)
        object.__setattr__(self, "hi", hi_r)

    @classmethod
    def _raw(cls, lo, hi) -> "Interval":
        obj = object.__new__(cls)
        object.__setattr__(obj, "lo", lo)
        object.__setattr__(obj, "hi", hi)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    def __reduce__(self):
        return (_from_hex_pair, (self.to_hex(),))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def exact(cls, value, prec: int | None = None) -> "Interval":
        if isinstance(value, Interval):
            return value if prec is None else value.with_precision(prec)
        return cls(value, prec=prec)

    @classmethod
    def hull(cls, a: "Interval", b: "Interval") -> "Interval":
        return cls._raw(min(a.lo, b.lo), max(a.hi, b.hi))

    @property
    def prec(self) -> int:
        return max(self.lo.precision, self.hi.precision)

    def with_precision(self, prec: int) -> "Interval":
        down, up = _contexts(prec)
        return Interval._raw(down.plus(self.lo), up.plus(self.hi))

    def _coerce(self, other) -> "Interval":
        if isinstance(other, Interval):
            return other
        return Interval(other, prec=self.prec)

    def _ctx(self, other: "Interval | None" = None):
        p = self.prec if other is None else max(self.prec, other.prec)
        return _contexts(p)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        d, u = self._ctx(o)
        return Interval._raw(d.add(self.lo, o.lo), u.add(self.hi, o.hi))

    __radd__ = __add__

    def __neg__(self):
        # bare -x on an mpfr rounds to the global (53-bit) context
        d, _ = self._ctx()
        return Interval._raw(d.minus(self.hi), d.minus(self.lo))

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        d, _ = self._ctx()
        return Interval._raw(d.add(_ZERO, 0), max(d.minus(self.lo), self.hi))

    def __sub__(self, other):
        o = self._coerce(other)
        d, u = self._ctx(o)
        return Interval._raw(d.sub(self.lo, o.hi), u.sub(self.hi, o.lo))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        d, u = self._ctx(o)
        a, b, c, e = self.lo, self.hi, o.lo, o.hi
        if a >= 0 and c >= 0:
            return Interval._raw(d.mul(a, c), u.mul(b, e))
        lo = min(d.mul(a, c), d.mul(a, e), d.mul(b, c), d.mul(b, e))
        hi = max(u.mul(a, c), u.mul(a, e), u.mul(b, c), u.mul(b, e))
        return Interval._raw(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.lo <= 0 <= o.hi:
            raise DomainError(f"division by an interval containing zero: {o!r}")
        d, u = self._ctx(o)
        a, b, c, e = self.lo, self.hi, o.lo, o.hi
        if a >= 0 and c > 0:
            return Interval._raw(d.div(a, e), u.div(b, c))
        lo = min(d.div(a, c), d.div(a, e), d.div(b, c), d.div(b, e))
        hi = max(u.div(a, c), u.div(a, e), u.div(b, c), u.div(b, e))
        return Interval._raw(lo, hi)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k):
        if isinstance(k, Interval) or not isinstance(k, int):
            return self.pow(k)
        d, u = self._ctx()
        if k == 0:
            return Interval._raw(d.add(_ZERO, 1), u.add(_ZERO, 1))
        if k < 0:
            if self.lo <= 0 <= self.hi:
                raise DomainError("negative power of an interval containing zero")
            return 1 / (self ** (-k))
        if self.lo >= 0:
            return Interval._raw(d.pow(self.lo, k), u.pow(self.hi, k))
        if self.hi <= 0:
            if k % 2:
                return Interval._raw(d.pow(self.lo, k), u.pow(self.hi, k))
            return Interval._raw(d.pow(self.hi, k), u.pow(self.lo, k))
        if k % 2:
            return Interval._raw(d.pow(self.lo, k), u.pow(self.hi, k))
        return Interval._raw(d.add(_ZERO, 0), max(u.pow(self.lo, k), u.pow(self.hi, k)))

    def pow(self, exponent) -> "Interval":
        """Real power ``self ** exponent`` for a positive base."""
        if isinstance(exponent, int):
            return self**exponent
        if self.lo <= 0:
            raise DomainError(f"real power needs a positive base, got {self!r}")
        return (self._coerce(exponent) * self.log()).exp()

    def log(self) -> "Interval":
        if self.lo <= 0:
            raise DomainError(f"log of an interval reaching non-positive reals: {self!r}")
        d, u = self._ctx()
        return Interval._raw(d.log(self.lo), u.log(self.hi))

    def exp(self) -> "Interval":
        d, u = self._ctx()
        return Interval._raw(d.exp(self.lo), u.exp(self.hi))

    def sqrt(self) -> "Interval":
        if self.lo < 0:
            raise DomainError(f"sqrt of an interval reaching negative reals: {self!r}")
        d, u = self._ctx()
        return Interval._raw(d.sqrt(self.lo), u.sqrt(self.hi))

    def log1p(self) -> "Interval":
        if self.lo <= -1:
            raise DomainError(f"log1p of an interval reaching -1: {self!r}")
        d, u = self._ctx()
        return Interval._raw(d.log1p(self.lo), u.log1p(self.hi))

    # -- queries --------------------------------------------------------------

    def width(self):
        return _contexts(self.prec)[1].sub(self.hi, self.lo)

    def mid(self):
        d, _ = _contexts(self.prec + 1)
        return d.div(d.add(self.lo, self.hi), 2)

    def __float__(self) -> float:
        return float(self.mid())

    def contains(self, value) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        x = _exact(value)
        return self.lo <= x <= self.hi

    __contains__ = contains

    def overlaps(self, other: "Interval") -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def certainly_lt(self, other) -> bool:
        """True when every point of ``self`` is below every point of ``other``."""
        if isinstance(other, Interval):
            return self.hi < other.lo
        return self.hi < _exact(other)

    def certainly_gt(self, other) -> bool:
        if isinstance(other, Interval):
            return self.lo > other.hi
        return self.lo > _exact(other)

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    # -- formatting -------------------------------------------------------------

    def digits(self) -> int:
        return int(math.ceil(self.prec * math.log10(2))) + 1

    def lo_str(self, digits: int | None = None) -> str:
        return format(self.lo, f".{digits or self.digits()}Dg")

    def hi_str(self, digits: int | None = None) -> str:
        return format(self.hi, f".{digits or self.digits()}Ug")

    def to_json(self) -> dict:
        """Decimal endpoints rounded outward, safe to re-read as an enclosure."""
        return {"lo": self.lo_str(), "hi": self.hi_str()}

    def to_hex(self) -> dict:
        """Exact endpoint encoding as (hex significand, binary exponent, precision)."""
        out = {}
        for name, x in (("lo", self.lo), ("hi", self.hi)):
            m, e = x.as_mantissa_exp()
            out[name] = [hex(int(m)), int(e), int(x.precision)]
        return out

    @classmethod
    def from_hex(cls, data: dict) -> "Interval":
        ends = []
        for name in ("lo", "hi"):
            m, e, p = data[name]
            with gmpy2.context(precision=int(p), round=gmpy2.RoundDown):
                ends.append(gmpy2.mul_2exp(mpfr(int(m, 16)), int(e)))
        return cls._raw(*ends)

    def __repr__(self):
        return f"Interval([{self.lo_str(20)}, {self.hi_str(20)}])"


def _from_hex_pair(data):
    return Interval.from_hex(data)


def as_interval(x, prec: int | None = None) -> Interval:
    return Interval.exact(x, prec)


# -- constants --------------------------------------------------------------------


def pi(prec: int = DEFAULT_PRECISION) -> Interval:
    d, u = _contexts(prec)
    return Interval._raw(d.const_pi(), u.const_pi())


def euler_gamma(prec: int = DEFAULT_PRECISION) -> Interval:
    """Enclosure of the Euler-Mascheroni constant, one ulp wide."""
    if prec < 53:
        raise ValueError("precision must be at least 53 bits")
    d, u = _contexts(prec)
    return Interval._raw(d.const_euler(), u.const_euler())


@dataclass(frozen=True)
class Constants:
    gamma: Interval
    exp_gamma: Interval
    precision: int


@lru_cache(maxsize=None)
def constants(prec: int = DEFAULT_PRECISION) -> Constants:
    g = euler_gamma(prec)
    return Constants(gamma=g, exp_gamma=g.exp(), precision=prec)


# -- zeta at integers ---------------------------------------------------------------


@lru_cache(maxsize=None)
def _bernoulli(count: int) -> tuple[Fraction, ...]:
    """B_0 .. B_{count-1} (convention B_1 = +1/2) by the Akiyama-Tanigawa algorithm."""
    out = []
    a = [Fraction(0)] * count
    for m in range(count):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return tuple(out)


ZETA_TERMS = 10_000
_ZETA_GUARD = 24


@lru_cache(maxsize=None)
def zeta_int(t: int, prec: int = DEFAULT_PRECISION, terms: int = ZETA_TERMS) -> Interval:
    """Enclosure of zeta(t) for an integer t >= 2.

    Sums ``k**-t`` for ``k < terms`` and encloses the tail with the
    Euler-Maclaurin expansion at ``terms``. ``x**-t`` is completely monotone, so
    the truncation error is bounded by the first omitted correction term.
    """
    if not isinstance(t, int) or t < 2:
        raise DomainError(f"zeta_int needs an integer t >= 2, got {t!r}")
    if terms < 2:
        raise ValueError("terms must be at least 2")
    wp = prec + _ZETA_GUARD + terms.bit_length()
    d, u = _contexts(wp)
    lo = hi = mpfr(0)
    # smallest terms first keeps the rounding error small
    for k in range(terms - 1, 0, -1):
        kk = mpz(k)
        lo = d.add(lo, d.pow(kk, -t))
        hi = u.add(hi, u.pow(kk, -t))
    partial = Interval._raw(lo, hi)

    n = Interval(terms, prec=wp)
    tail = n ** (1 - t) / (t - 1) + n ** (-t) / 2
    target = Fraction(1, 2 ** (wp + 4))
    bern = _bernoulli(2 * 64 + 2)
    rising = Fraction(t)  # rising factorial (t)_{2j-1}
    fact = Fraction(2)  # (2j)!
    j = 1
    while True:
        if 2 * j + 2 >= len(bern):
            bern = _bernoulli(4 * j + 4)
        coeff = bern[2 * j] / fact * rising
        term = Interval(coeff, prec=wp) * n ** (-t - 2 * j + 1)
        nxt_rising = rising * (t + 2 * j - 1) * (t + 2 * j)
        nxt_fact = fact * (2 * j + 1) * (2 * j + 2)
        nxt_coeff = bern[2 * j + 2] / nxt_fact * nxt_rising
        bound = abs(Interval(nxt_coeff, prec=wp) * n ** (-t - 2 * j - 1))
        tail = tail + term
        # the series is asymptotic: also stop once the terms start growing
        if bound.hi < target or bound.hi >= abs(term).hi:
            tail = tail + Interval._raw(d.minus(bound.hi), bound.hi)
            break
        rising, fact, j = nxt_rising, nxt_fact, j + 1
    return (partial + tail).with_precision(prec)
