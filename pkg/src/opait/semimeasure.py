"""Lower-computable semi-measures as monotone rational approximant streams."""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .machine import PrefixMachine
from .rational import fmt_rat, rat
from .strings import StrLike, as_index, from_index


class MassExceeded(ValueError):
    """A finite partial sum of a would-be semi-measure went above 1."""


class SemiMeasureStream:
    """(n, s) -> rational, memoized.  ``s`` may be a bit string or its index."""

    def __init__(self, fn: Callable[[int, int], Fraction], descriptor: str):
        self._fn = fn
        self.descriptor = descriptor
        self._memo: dict[tuple[int, int], Fraction] = {}
        self._lock = threading.Lock()

    def eval(self, n: int, s: StrLike) -> Fraction:
        if n < 1:
            raise ValueError("stages start at 1")
        key = (n, as_index(s))
        with self._lock:
            hit = self._memo.get(key)
        if hit is None:
            hit = rat(self._fn(*key))
            with self._lock:
                self._memo[key] = hit
        return hit

    __call__ = eval

    def __repr__(self):
        return f"SemiMeasureStream({self.descriptor})"


@dataclass(frozen=True)
class IncreasingSequence:
    fn: Callable[[int], Fraction]
    descriptor: str = ""

    def eval(self, n: int) -> Fraction:
        return rat(self.fn(n))

    __call__ = eval


@dataclass
class Violation:
    kind: str
    witness: tuple
    detail: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "witness": list(self.witness), "detail": self.detail}


@dataclass
class ValidationReport:
    subject: str
    N: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"subject": self.subject, "N": self.N, "ok": self.ok,
                "violations": [v.to_json() for v in self.violations]}


# -- constructors ----------------------------------------------------------------

def stream_from_pv(machine: PrefixMachine) -> SemiMeasureStream:
    """eval(n, s) = total weight of programs found by stage n that print s."""
    return SemiMeasureStream(lambda n, s: machine.pv_table(n).get(s, Fraction(0)),
                             f"machine-pv:{machine.name}")


def stream_from_complexity(machine: PrefixMachine) -> SemiMeasureStream:
    """eval(n, s) = 2^-K where K is the shortest program for s found by stage n."""

    def fn(n, s):
        k = machine.complexity_table(n).get(s)
        return Fraction(0) if k is None else Fraction(1, 2 ** k)

    return SemiMeasureStream(fn, f"machine-complexity:{machine.name}")


def constant_stream(values: Callable[[int], Fraction], descriptor: str = "planted") -> SemiMeasureStream:
    """A stage-independent stream s -> values(s)."""
    return SemiMeasureStream(lambda n, s: values(s), descriptor)


def zero_stream() -> SemiMeasureStream:
    return SemiMeasureStream(lambda n, s: Fraction(0), "zero")


# -- validation ---------------------------------------------------------------

def validate_semimeasure(stream: SemiMeasureStream, N: int) -> ValidationReport:
    """Nonnegativity, monotonicity in n and the partial mass bound for n, s <= N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rep = ValidationReport(stream.descriptor, N)
    for n in range(1, N + 1):
        mass = Fraction(0)
        for s in range(1, N + 1):
            v = stream.eval(n, s)
            if v < 0:
                rep.violations.append(Violation("negative", (n, s), str(v)))
            if n < N:
                w = stream.eval(n + 1, s)
                if w < v:
                    rep.violations.append(Violation("monotonicity", (n, n + 1, s), f"{v} > {w}"))
            if s <= n:
                mass += v
        if mass > 1:
            rep.violations.append(Violation("mass", (n,), f"sum = {mass}"))
    return rep


# -- the two conversions between semi-measures and increasing sequences ----------

def to_increasing_sequence(stream: SemiMeasureStream) -> IncreasingSequence:
    """a_n = sum_{s<=n} eval(n, s)."""
    return IncreasingSequence(
        lambda n: sum((stream.eval(n, s) for s in range(1, n + 1)), Fraction(0)),
        f"partial-mass:{stream.descriptor}")


def from_increasing_sequence(b: IncreasingSequence | Callable[[int], Fraction], d: int,
                             check_upto: int = 64) -> SemiMeasureStream:
    """r(1) = 0, r(s) = (b_s - b_{s-1}) / d; constant in the stage.

    The caller warrants d >= lim b - b_1.  Partial sums are checked up to
    ``check_upto`` eagerly and lazily beyond it.
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    bf = b.eval if isinstance(b, IncreasingSequence) else b

    def r(s):
        if s == 1:
            return Fraction(0)
        return (rat(bf(s)) - rat(bf(s - 1))) / d

    def fn(n, s):
        if s > 1 and (rat(bf(s)) - rat(bf(1))) / d > 1:
            raise MassExceeded(f"partial sum up to s={s} exceeds 1")
        return r(s)

    for N in range(2, check_upto + 1):
        if (rat(bf(N)) - rat(bf(1))) / d > 1:
            raise MassExceeded(f"partial sum up to s={N} exceeds 1")
    return SemiMeasureStream(fn, f"from-sequence(d={d})")


# -- domination -------------------------------------------------------------------

@dataclass
class DominationReport:
    c: Fraction
    budget: int
    found: dict = field(default_factory=dict)  # (n, s) -> n'
    unresolved: list = field(default_factory=list)

    @property
    def all_found(self) -> bool:
        return not self.unresolved

    def to_json(self) -> dict:
        return {"c": fmt_rat(self.c), "budget": self.budget,
                "found": [[n, s, m] for (n, s), m in sorted(self.found.items())],
                "unresolved": [list(p) for p in self.unresolved]}


def corroborate_domination(m: SemiMeasureStream, r: SemiMeasureStream, c, budget: int) -> DominationReport:
    """For each (n, s) <= budget look for n' in [n, budget] with c r(n, s) <= m(n', s).

    A hit certifies c r(n, s) <= m(s); a miss refutes nothing.
    """
    c = rat(c)
    if c <= 0:
        raise ValueError("c must be positive")
    rep = DominationReport(c, budget)
    for n in range(1, budget + 1):
        for s in range(1, budget + 1):
            target = c * r.eval(n, s)
            hit = next((k for k in range(n, budget + 1) if target <= m.eval(k, s)), None)
            if hit is None:
                rep.unresolved.append((n, s))
            else:
                rep.found[(n, s)] = hit
    return rep


# -- export -------------------------------------------------------------------------

def to_csv(stream: SemiMeasureStream, N: int, window: Optional[int] = None) -> str:
    """Rows (n, s index, s bits, num, den) for n <= N, s <= window (default N)."""
    window = window or N
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "s", "bits", "num", "den"])
    for n in range(1, N + 1):
        for s in range(1, window + 1):
            v = stream.eval(n, s)
            w.writerow([n, s, from_index(s), v.numerator, v.denominator])
    return buf.getvalue()
