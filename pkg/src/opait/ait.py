"""Operator information content: certified upper bounds on -log2 M(s).

M(s) dominates both f_M(n, s) - 2^-n I and the floor c_s I, hence also their
average L_n.  Since log is operator monotone, -log2 L_n >= -log2 M(s), and an
entrywise enclosure of -log2 L_n is a certified upper bound at stage n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .constructor import Dovetailer, scalar_floor
from .linalg import (
    BlockScalarOperator,
    IntervalHermitian,
    NotPositiveDefinite,
    StateVector,
    combine,
    loewner_leq,
    quad_form,
    spectral_neg_log2,
)
from .machine import Halted, OutOfFuel, run_vm
from .rational import Interval, fmt_rat, neg_log2_interval, rat
from .semimeasure import SemiMeasureStream
from .semipovm import SemiPovmStream, two_pow
from .strings import StrLike, as_index, from_index, pair, unpair

ONE = BlockScalarOperator.identity()


@dataclass
class HhatBound:
    s: int
    stage: int
    operator: IntervalHermitian
    floor: Fraction
    lower: BlockScalarOperator   # the certified lower bound L_n of M(s)
    eps: Fraction

    def diagonal(self, dim: Optional[int] = None) -> list[Interval]:
        dim = dim or self.operator.dim
        return [self.operator.entry(i, i).re for i in range(dim)]

    def to_json(self) -> dict:
        return {"s": from_index(self.s), "index": self.s, "stage": self.stage,
                "floor": fmt_rat(self.floor), "eps": fmt_rat(self.eps),
                "operator": self.operator.to_json()}


def lower_bound_operator(d: Dovetailer, s: int, n: int) -> BlockScalarOperator:
    """L_n = 1/2 (f_M(n, s) - 2^-n I) + 1/2 c_s I."""
    c = scalar_floor(s)
    return combine([(Fraction(1, 2), d.mixture(n, s)),
                    (Fraction(1, 2) * (c - two_pow(-n)), ONE)])


def hhat_upper(d: Dovetailer, s: StrLike, n: int, eps) -> HhatBound:
    s = as_index(s)
    eps = rat(eps)
    c = scalar_floor(s)
    if two_pow(-n) >= c:
        raise NotPositiveDefinite(f"stage {n} too early for s={s}: need n > s + 2")
    L = lower_bound_operator(d, s, n)
    return HhatBound(s, n, spectral_neg_log2(L, eps), c, L, eps)


def quad_enclosure(bound: HhatBound, x: StateVector) -> Interval:
    return bound.operator.quad_form(x)


def jensen_check(bound: HhatBound, x: StateVector) -> tuple[Interval, Interval]:
    """(<enclosure x, x>, -log2 <L_n x, x>).  For unit x the true value of the
    first is >= the second (concavity of log)."""
    q = quad_form(bound.lower, x)
    return quad_enclosure(bound, x), neg_log2_interval(Interval.point(q), bound.eps)


def hhat_derived(kind: str, d: Dovetailer, s: StrLike, t: StrLike, n: int, eps) -> IntervalHermitian:
    """Joint, conditional or mutual information from Ĥ upper bounds.

    Only ``joint`` is a one-sided certificate; differences of upper bounds are
    indicative enclosures only.
    """
    s, t = as_index(s), as_index(t)
    if kind == "joint":
        return hhat_upper(d, pair(s, t), n, eps).operator
    if kind == "conditional":
        return hhat_upper(d, pair(t, s), n, eps).operator - hhat_upper(d, t, n, eps).operator
    if kind == "mutual":
        hs = hhat_upper(d, s, n, eps).operator
        ht = hhat_upper(d, t, n, eps).operator
        return hs + ht - hhat_upper(d, pair(s, t), n, eps).operator
    raise ValueError(f"unknown kind {kind!r}")


# -- partial maps and transport ------------------------------------------------------

UNDEFINED = object()


@dataclass(frozen=True)
class PartialMap:
    """t -> psi(t) with fuel; returns an index, None (still running) or UNDEFINED."""

    name: str
    fn: Callable[[int, int], object]

    def __call__(self, t: int, fuel: int):
        return self.fn(t, fuel)


def identity_map() -> PartialMap:
    return PartialMap("identity", lambda t, fuel: t)


def swap_map() -> PartialMap:
    def fn(t, fuel):
        a, b = unpair(t)
        return pair(b, a)
    return PartialMap("swap", fn)


def pair_with_empty_map() -> PartialMap:
    return PartialMap("pair-with-empty", lambda t, fuel: pair(t, 1))


def diagonal_pair_map() -> PartialMap:
    return PartialMap("pair-with-self", lambda t, fuel: pair(t, t))


def first_map() -> PartialMap:
    return PartialMap("first", lambda t, fuel: unpair(t)[0])


def empty_map() -> PartialMap:
    return PartialMap("empty", lambda t, fuel: None)


def vm_map(bits: str) -> PartialMap:
    """psi(t) = output of the VM program ``bits`` with t preloaded in register 0."""

    def fn(t, fuel):
        out = run_vm(bits, fuel, (t,))
        if isinstance(out, Halted):
            return as_index(out.output)
        return None if isinstance(out, OutOfFuel) else UNDEFINED

    return PartialMap(f"vm:{bits}", fn)


NAMED_MAPS = {"identity": identity_map, "swap": swap_map, "empty": empty_map, "first": first_map,
              "pair-with-empty": pair_with_empty_map, "pair-with-self": diagonal_pair_map}


def named_map(name: str) -> PartialMap:
    if name.startswith("vm:"):
        return vm_map(name[3:])
    try:
        return NAMED_MAPS[name]()
    except KeyError:
        raise ValueError(f"unknown map {name!r}; choose from {sorted(NAMED_MAPS)} or vm:<bits>")


class DomainEnumeration:
    """At time n, run psi on every undiscovered t <= n with fuel n."""

    def __init__(self, psi: PartialMap):
        self.psi = psi
        self.time = 0
        self.discovered: list[tuple[int, int, int]] = []   # (time, t, psi(t))
        self._seen: set[int] = set()
        self._dead: set[int] = set()

    def advance_to(self, n: int):
        while self.time < n:
            self.time += 1
            for t in range(1, self.time + 1):
                if t in self._seen or t in self._dead:
                    continue
                v = self.psi(t, self.time)
                if v is UNDEFINED:
                    self._dead.add(t)
                elif v is not None:
                    self._seen.add(t)
                    self.discovered.append((self.time, t, v))

    def preimages(self, n: int, s: int) -> list[int]:
        """t(1, s), ..., t(h(n, s), s): preimages of s found by time n, in order."""
        self.advance_to(n)
        return [t for (time, t, v) in self.discovered if time <= n and v == s]


@dataclass
class TransportReport:
    psi: str
    domination_constant: Fraction = Fraction(1)
    witnesses: list = field(default_factory=list)  # (n, t, psi(t), holds)

    @property
    def ok(self) -> bool:
        return all(w[3] for w in self.witnesses)

    def to_json(self) -> dict:
        return {"psi": self.psi, "domination_constant": fmt_rat(self.domination_constant),
                "witnesses": [[n, t, v, ok] for n, t, v, ok in self.witnesses]}


def psi_transport(psi: PartialMap, base: SemiPovmStream,
                  witness_grid: int = 0) -> tuple[SemiPovmStream, TransportReport]:
    """f'(n, s) = sum_{k <= h(n, s)} base(n + k, t(k, s)).

    Witnesses check base(n, t) <= f'(n, psi(t)) for every t found by time n,
    n <= witness_grid.
    """
    dom = DomainEnumeration(psi)

    def fn(n, s):
        ts = dom.preimages(n, s)
        if not ts:
            return BlockScalarOperator.zero()
        return combine([(1, base.eval(n + k, t)) for k, t in enumerate(ts, start=1)])

    def gfn(n, s):
        ts = dom.preimages(n, s)
        return max([base.gbound(n + k, t) for k, t in enumerate(ts, start=1)] or [1])

    out = SemiPovmStream(fn, gfn, descriptor=f"psi-transport:{psi.name}:{base.descriptor}",
                         guarded=base.guarded, space_dim=base.space_dim)
    rep = TransportReport(psi.name)
    for n in range(1, witness_grid + 1):
        dom.advance_to(n)
        for time, t, v in dom.discovered:
            if time <= n:
                rep.witnesses.append((n, t, v, loewner_leq(base.eval(n, t), out.eval(n, v))))
    return out, rep


def diagonal_gap(upper: IntervalHermitian, lower: IntervalHermitian) -> Fraction:
    """max_i (upper_ii.hi - lower_ii.lo): how far ``upper`` can exceed ``lower``."""
    m = max(upper.dim, lower.dim)
    return max(upper.entry(i, i).re.hi - lower.entry(i, i).re.lo for i in range(m))


def hhat_transport_constant(d: Dovetailer, psi: PartialMap, n: int, eps, window: int) -> Fraction:
    """Finite-stage measurement of c in Ĥ(psi(t)) <= Ĥ(t) + cI: the largest
    diagonal gap over t <= window in dom(psi) whose bounds exist at stage n.
    Measured, not certified."""
    dom = DomainEnumeration(psi)
    dom.advance_to(n)
    c = Fraction(0)
    for _, t, v in dom.discovered:
        if t > window or two_pow(-n) >= scalar_floor(max(t, v)):
            continue
        hv = hhat_upper(d, v, n, eps).operator
        ht = hhat_upper(d, t, n, eps).operator
        c = max(c, diagonal_gap(hv, ht))
    return c


def state_pairing(base: SemiPovmStream, x: StateVector) -> SemiMeasureStream:
    """s -> max(<base(n, s) x, x> - 2^-n, 0)."""
    return SemiMeasureStream(
        lambda n, s: max(quad_form(base.eval(n, s), x) - two_pow(-n), Fraction(0)),
        f"state-pairing:{base.descriptor}")


def complexity_constant(l: int, k: int, n: int, s: int, eps) -> Fraction:
    """c with <Ĥ-upper x, x> <= k + c for unit x inside the first n basis
    vectors, when the plant at index l gives f(l, n, s) >= 2^-k I_n.

    There L_n >= d = 1/2 (2^-(l+k) - 2^-n + c_s) on the block, and the tail of
    L_n is positive, so -log2 L_n <= -log2 d there.
    """
    dval = Fraction(1, 2) * (two_pow(-l - k) - two_pow(-n) + scalar_floor(s))
    if dval <= 0 or two_pow(-n) >= scalar_floor(s):
        raise ValueError("stage too early for the complexity constant")
    return neg_log2_interval(Interval.point(dval), rat(eps)).hi - k


def negative_control_table(S: int = 10, n: int = 12) -> list[tuple]:
    """Rows (s, p_proj, p_embed, ratio) measuring e_s at stage n.

    p_proj is the projective POVM's certified probability of outcome s,
    p_embed the same for the embedded scalar mixture.  Any c with
    c * P(s) <= embedded(s) for all s <= S must be <= min ratio.
    """
    from .constructor import universal_mixture
    from .semipovm import measurement_distribution, projective_stream, scalar_embed

    proj = projective_stream()
    emb = scalar_embed(universal_mixture())
    rows = []
    for s in range(1, S + 1):
        x = StateVector.basis(s)
        p = measurement_distribution(proj, n, x, S).probs[s - 1]
        q = measurement_distribution(emb, n, x, S).probs[s - 1]
        rows.append((s, p, q, q / p))
    return rows
