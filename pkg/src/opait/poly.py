"""Exact univariate polynomials over Q (coefficients highest degree first).

Only what root isolation needs: evaluation, division, gcd, squarefree
decomposition and Sturm sequences.
"""

from __future__ import annotations

from fractions import Fraction

from .rational import Interval

Poly = list  # list[Fraction], leading coefficient first, no leading zeros


def trim(p: Poly) -> Poly:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return [Fraction(c) for c in p[i:]] or [Fraction(0)]


def degree(p: Poly) -> int:
    p = trim(p)
    if len(p) == 1 and p[0] == 0:
        return -1
    return len(p) - 1


def is_zero(p: Poly) -> bool:
    return degree(p) < 0


def evaluate(p: Poly, x) -> Fraction:
    acc = Fraction(0)
    for c in p:
        acc = acc * x + c
    return acc


def derivative(p: Poly) -> Poly:
    n = len(p) - 1
    if n <= 0:
        return [Fraction(0)]
    return trim([c * (n - i) for i, c in enumerate(p[:-1])])


def monic(p: Poly) -> Poly:
    p = trim(p)
    lead = p[0]
    return [c / lead for c in p]


def divmod_poly(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    a, b = trim(a), trim(b)
    if is_zero(b):
        raise ZeroDivisionError("polynomial division by zero")
    db = len(b) - 1
    if len(a) - 1 < db:
        return [Fraction(0)], a
    rem = list(a)
    quot = []
    for i in range(len(a) - db):
        c = rem[i] / b[0]
        quot.append(c)
        if c:
            for j in range(1, db + 1):
                rem[i + j] -= c * b[j]
    return trim(quot), trim(rem[len(a) - db:] or [Fraction(0)])


def gcd(a: Poly, b: Poly) -> Poly:
    a, b = trim(a), trim(b)
    while not is_zero(b):
        a, b = b, divmod_poly(a, b)[1]
    if is_zero(a):
        return a
    return monic(a)


def squarefree_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: p = lead * prod q_i**i with q_i squarefree, coprime."""
    p = monic(p)
    if degree(p) <= 0:
        return []
    out = []
    dp = derivative(p)
    a = gcd(p, dp)
    b = divmod_poly(p, a)[0]
    c = divmod_poly(dp, a)[0]
    d = _sub(c, derivative(b))
    i = 1
    while degree(b) > 0:
        a = gcd(b, d)
        if degree(a) > 0:
            out.append((monic(a), i))
        b = divmod_poly(b, a)[0]
        c = divmod_poly(d, a)[0]
        d = _sub(c, derivative(b))
        i += 1
    return out


def _sub(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    a = [Fraction(0)] * (n - len(a)) + list(a)
    b = [Fraction(0)] * (n - len(b)) + list(b)
    return trim([x - y for x, y in zip(a, b)])


def multiply(a: Poly, b: Poly) -> Poly:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return trim(out)


def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [trim(p), derivative(p)]
    while not is_zero(seq[-1]):
        r = divmod_poly(seq[-2], seq[-1])[1]
        if is_zero(r):
            break
        seq.append([-c for c in r])
    return seq


def _variations(seq: list[Poly], x) -> int:
    signs = []
    for q in seq:
        v = evaluate(q, x)
        if v:
            signs.append(v > 0)
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def root_bound(p: Poly) -> Fraction:
    """Cauchy bound: every real root lies in [-B, B]."""
    p = monic(p)
    return 1 + max((abs(c) for c in p[1:]), default=Fraction(0))


class RootIsolator:
    """Sturm-based isolation and refinement of the real roots of a squarefree p."""

    def __init__(self, p: Poly):
        self.p = trim(p)
        self.seq = sturm_sequence(self.p)

    def count(self, a, b) -> int:
        """Number of distinct roots in the half-open interval (a, b]."""
        return _variations(self.seq, a) - _variations(self.seq, b)

    def isolate(self, width: Fraction) -> list[Interval]:
        """Closed enclosures of width <= ``width``, one per distinct real root.

        A root met exactly by bisection comes back as a degenerate interval.
        """
        if degree(self.p) <= 0:
            return []
        bound = root_bound(self.p)
        out: list[Interval] = []
        stack = [(-bound - 1, bound)]
        while stack:
            a, b = stack.pop()
            k = self.count(a, b)
            if k == 0:
                continue
            if k == 1:
                if evaluate(self.p, b) == 0:
                    out.append(Interval(b, b))
                    continue
                if b - a <= width:
                    out.append(Interval(a, b))
                    continue
            mid = (a + b) / 2
            stack.append((a, mid))
            stack.append((mid, b))
        out.sort(key=lambda iv: iv.lo)
        return out

    def refine(self, iv: Interval) -> Interval:
        """Halve an isolating interval (a, b] holding exactly one root."""
        if iv.width == 0:
            return iv
        a, b = iv.lo, iv.hi
        if evaluate(self.p, b) == 0:
            return Interval(b, b)
        mid = (a + b) / 2
        if evaluate(self.p, mid) == 0:
            return Interval(mid, mid)
        if self.count(a, mid) == 1:
            return Interval(a, mid)
        return Interval(mid, b)


def isolate_real_roots(p: Poly, width: Fraction) -> list[Interval]:
    return RootIsolator(p).isolate(width)
