"""Exact scalars: Gaussian rationals, rational intervals, and a rigorous log2.

Everything here is exact.  Interval endpoints are rationals; rounding is only
ever outward onto a dyadic grid so denominators stay bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor
from typing import Union

Rat = Fraction
RatLike = Union[int, Fraction, str]


def rat(x: RatLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted on exact paths")
    return Fraction(x)


def fmt_rat(q: Fraction) -> str:
    """Canonical ``num/den`` string (denominator always present)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rat(text: str) -> Fraction:
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise TypeError(f"expected a rational string, got {text!r}")
    return Fraction(text.strip())


class RationalComplex:
    """a + ib with a, b rational."""

    __slots__ = ("re", "im")

    def __init__(self, re: RatLike = 0, im: RatLike = 0):
        self.re = rat(re)
        self.im = rat(im)

    @staticmethod
    def of(x) -> "RationalComplex":
        if isinstance(x, RationalComplex):
            return x
        return RationalComplex(x, 0)

    def conjugate(self) -> "RationalComplex":
        return RationalComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def __add__(self, other):
        o = RationalComplex.of(other)
        return RationalComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = RationalComplex.of(other)
        return RationalComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return RationalComplex.of(other) - self

    def __neg__(self):
        return RationalComplex(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RationalComplex(self.re * other, self.im * other)
        o = RationalComplex.of(other)
        return RationalComplex(self.re * o.re - self.im * o.im,
                               self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return RationalComplex(self.re / other, self.im / other)
        o = RationalComplex.of(other)
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero")
        n = self * o.conjugate()
        return RationalComplex(n.re / d, n.im / d)

    def __rtruediv__(self, other):
        return RationalComplex.of(other) / self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, RationalComplex):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        if self.im == 0:
            return f"RationalComplex({self.re})"
        return f"RationalComplex({self.re}, {self.im})"

    def to_json(self):
        if self.im == 0:
            return fmt_rat(self.re)
        return [fmt_rat(self.re), fmt_rat(self.im)]

    @staticmethod
    def from_json(obj) -> "RationalComplex":
        if isinstance(obj, list):
            if len(obj) != 2:
                raise ValueError(f"complex entry must be [re, im], got {obj!r}")
            return RationalComplex(parse_rat(obj[0]), parse_rat(obj[1]))
        return RationalComplex(parse_rat(obj), 0)


# -- intervals ---------------------------------------------------------------

def round_down(q: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(floor(q * scale), scale)


def round_up(q: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(ceil(q * scale), scale)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(q) -> "Interval":
        q = rat(q)
        return Interval(q, q)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, q) -> bool:
        return self.lo <= q <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return Interval.point(other) - self

    def __mul__(self, other):
        if not isinstance(other, Interval):
            q = rat(other)
            a, b = self.lo * q, self.hi * q
            return Interval(min(a, b), max(a, b))
        ps = (self.lo * other.lo, self.lo * other.hi,
              self.hi * other.lo, self.hi * other.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return self * other.reciprocal()

    def outward(self, bits: int) -> "Interval":
        return Interval(round_down(self.lo, bits), round_up(self.hi, bits))

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def to_json(self):
        return [fmt_rat(self.lo), fmt_rat(self.hi)]

    @staticmethod
    def from_json(obj) -> "Interval":
        return Interval(parse_rat(obj[0]), parse_rat(obj[1]))


ZERO_IV = Interval(Fraction(0), Fraction(0))


@dataclass(frozen=True)
class CInterval:
    """Rectangular complex interval re + i*im."""

    re: Interval
    im: Interval = ZERO_IV

    @staticmethod
    def point(z) -> "CInterval":
        z = RationalComplex.of(z)
        return CInterval(Interval.point(z.re), Interval.point(z.im))

    @property
    def width(self) -> Fraction:
        return max(self.re.width, self.im.width)

    def __add__(self, other: "CInterval"):
        return CInterval(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "CInterval"):
        return CInterval(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return CInterval(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, Interval):
            return CInterval(self.re * other, self.im * other)
        if isinstance(other, (int, Fraction)):
            return CInterval(self.re * other, self.im * other)
        if isinstance(other, RationalComplex):
            other = CInterval.point(other)
        return CInterval(self.re * other.re - self.im * other.im,
                         self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conjugate(self) -> "CInterval":
        return CInterval(self.re, -self.im)

    def outward(self, bits: int) -> "CInterval":
        return CInterval(self.re.outward(bits), self.im.outward(bits))

    def contains(self, z) -> bool:
        z = RationalComplex.of(z)
        return self.re.contains(z.re) and self.im.contains(z.im)

    def to_json(self):
        if self.im == ZERO_IV:
            return self.re.to_json()
        return {"re": self.re.to_json(), "im": self.im.to_json()}


# -- rigorous logarithms -----------------------------------------------------

def _atanh_series(z: Fraction, tol: Fraction) -> Interval:
    """Enclosure of 2*atanh(z) = ln((1+z)/(1-z)) for 0 <= z <= 1/3."""
    if z == 0:
        return ZERO_IV
    z2 = z * z
    term = z
    total = Fraction(0)
    k = 0
    while True:
        total += term / (2 * k + 1)
        term *= z2
        k += 1
        # remaining terms: sum_{j>=k} z^(2j+1)/(2j+1) <= term / ((2k+1)(1-z^2))
        tail = term / ((2 * k + 1) * (1 - z2))
        if 2 * tail <= tol:
            return Interval(2 * total, 2 * (total + tail))


def _ln_mantissa(m: Fraction, tol: Fraction) -> Interval:
    # m in [1, 2): ln m = 2 atanh((m-1)/(m+1)), argument in [0, 1/3)
    return _atanh_series((m - 1) / (m + 1), tol)


def _split_pow2(q: Fraction) -> tuple[int, Fraction]:
    """q = 2**e * m with m in [1, 2)."""
    e = q.numerator.bit_length() - q.denominator.bit_length()
    m = q / (Fraction(2) ** e)
    if m < 1:
        e -= 1
        m *= 2
    elif m >= 2:
        e += 1
        m /= 2
    return e, m


def log2_interval(q, tol=Fraction(1, 1 << 40)) -> Interval:
    """Rational enclosure of log2(q), q > 0 rational, width <= tol."""
    q = rat(q)
    if q <= 0:
        raise ValueError("log2 of a non-positive number")
    tol = rat(tol)
    e, m = _split_pow2(q)
    if m == 1:
        return Interval.point(Fraction(e))
    inner = tol / 8
    ln_m = _ln_mantissa(m, inner)
    ln2 = _atanh_series(Fraction(1, 3), inner)
    frac = Interval(ln_m.lo / ln2.hi, ln_m.hi / ln2.lo)
    bits = max(8, (1 / tol).numerator.bit_length() + 4)
    out = (frac + e).outward(bits)
    assert out.width <= tol, (out, tol)
    return out


def neg_log2_interval(iv: Interval, tol=Fraction(1, 1 << 40)) -> Interval:
    """Enclosure of -log2 over a positive interval (decreasing map)."""
    if iv.lo <= 0:
        raise ValueError("-log2 needs a positive interval")
    half = rat(tol) / 2
    hi = -log2_interval(iv.lo, half).lo
    lo = -log2_interval(iv.hi, half).hi
    return Interval(lo, hi)
