"""a + b*sqrt(2) with rational a, b.  Test-only: keeps the library rational."""

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class QSqrt2:
    a: Fraction
    b: Fraction = Fraction(0)

    def __add__(self, o):
        o = lift(o)
        return QSqrt2(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QSqrt2(-self.a, -self.b)

    def __sub__(self, o):
        return self + (-lift(o))

    def __rsub__(self, o):
        return lift(o) - self

    def __mul__(self, o):
        o = lift(o)
        return QSqrt2(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def is_rational(self):
        return self.b == 0


def lift(x):
    return x if isinstance(x, QSqrt2) else QSqrt2(Fraction(x))


SQRT2 = QSqrt2(Fraction(0), Fraction(1))


def charpoly2(m):
    """det(xI - M) = x^2 - tr x + det for a 2x2 matrix over Q(sqrt 2)."""
    tr = m[0][0] + m[1][1]
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return [lift(1), -tr, det]


def poly_at(coeffs, x):
    acc = lift(0)
    for c in coeffs:
        acc = acc * x + c
    return acc
