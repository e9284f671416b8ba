"""Semi-POVM approximant streams on the 2^-n schedule, and measurement.

A stream maps (n, s) to a g(n, s)-square operator f(n, s) >= 0 with
f(n,s) - 2^-n I <= f(n+1,s) - 2^-(n+1) I.  "Guarded" streams are monotone
without slack and keep sum_{s<=n} f(n, s) <= I.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np

from .linalg import (
    BlockScalarOperator,
    RationalHermitian,
    StateVector,
    combine,
    is_psd,
    loewner_leq,
    quad_form,
)
from .rational import RationalComplex, fmt_rat, rat
from .semimeasure import SemiMeasureStream, ValidationReport, Violation
from .strings import StrLike, as_index, from_index

ONE = BlockScalarOperator.identity()


class ScheduleViolation(ValueError):
    pass


class NormMismatch(ValueError):
    pass


def two_pow(k: int) -> Fraction:
    return Fraction(2) ** k


def identity_block(m: int, scale=1) -> BlockScalarOperator:
    return BlockScalarOperator.projector(m, scale)


def zero_op() -> BlockScalarOperator:
    return BlockScalarOperator.zero()


class SemiPovmStream:
    """(n, s) -> BlockScalarOperator with zero tail, plus a block-size bound.

    ``space_dim`` is None for l2, or a finite dimension (1 gives the scalar
    view used by the semi-measure mixture).
    """

    def __init__(self, fn: Callable[[int, int], BlockScalarOperator],
                 gfn: Optional[Callable[[int, int], int]] = None, *,
                 descriptor: str, guarded: bool = False, space_dim: Optional[int] = None):
        self._fn = fn
        self._gfn = gfn
        self.descriptor = descriptor
        self.guarded = guarded
        self.space_dim = space_dim
        self._memo: dict[tuple[int, int], BlockScalarOperator] = {}
        self._lock = threading.Lock()

    def eval(self, n: int, s: StrLike) -> BlockScalarOperator:
        if n < 1:
            raise ValueError("stages start at 1")
        key = (n, as_index(s))
        with self._lock:
            hit = self._memo.get(key)
        if hit is None:
            hit = self._fn(*key)
            with self._lock:
                self._memo[key] = hit
        return hit

    __call__ = eval

    def gbound(self, n: int, s: StrLike) -> int:
        if self._gfn is not None:
            return self._gfn(n, as_index(s))
        return self.eval(n, s).dim

    def __repr__(self):
        return f"SemiPovmStream({self.descriptor})"


# -- validation -------------------------------------------------------------------

def validate_semipovm(stream: SemiPovmStream, N: int) -> ValidationReport:
    """Positivity, block size, 2^-n schedule; for guarded streams also
    slack-free monotonicity and the mass bound.  n, s range over 1..N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rep = ValidationReport(stream.descriptor, N)
    bad = rep.violations.append
    for n in range(1, N + 1):
        mass = []
        for s in range(1, N + 1):
            a = stream.eval(n, s)
            if not is_psd(a):
                bad(Violation("positivity", (n, s)))
            g = stream.gbound(n, s)
            if not a.is_square(g):
                bad(Violation("block-size", (n, s), f"not {g}-square"))
            if stream.space_dim is not None and a.trimmed().dim > stream.space_dim:
                bad(Violation("block-size", (n, s), f"exceeds space dimension {stream.space_dim}"))
            if n < N:
                b = stream.eval(n + 1, s)
                # f(n) - 2^-n I <= f(n+1) - 2^-(n+1) I
                if not is_psd(combine([(1, b), (-1, a), (two_pow(-n - 1), ONE)])):
                    bad(Violation("schedule", (n, s)))
                if stream.guarded and not loewner_leq(a, b):
                    bad(Violation("monotone", (n, s)))
            if s <= n:
                mass.append(a)
        if stream.guarded:
            total = combine([(1, ONE)] + [(-1, a) for a in mass])
            if not is_psd(total):
                bad(Violation("mass", (n,)))
    return rep


# -- schedule renormalization -----------------------------------------------------

def renormalize_schedule(fprime: SemiPovmStream, h: Callable[[int, int], Fraction],
                         gprime: Optional[Callable[[int, int], int]] = None,
                         descriptor: str = "") -> SemiPovmStream:
    """Turn a stream on a slower slack schedule h into one on the 2^-n schedule.

    Segments of output stages are interpolated between two input stages m < l
    with weights alpha_k = (hb(m) - 2^-k) / (hb(m) - hb(l)), hb = h + 2^-n.
    """
    gprime = gprime or fprime.gbound
    hfix: dict[int, bool] = {}

    def hh(n, s):
        # the construction needs hb(1, s) > 1/2, i.e. h(1, s) > 0
        if s not in hfix:
            hfix[s] = rat(h(1, s)) == 0
        return rat(h(n, s)) + (two_pow(-n) if hfix[s] else 0)

    def hbar(n, s):
        return hh(n, s) + two_pow(-n)

    segments: dict[int, list] = {}   # s -> [(first k, last k, m, l)]
    frontier: dict[int, tuple[int, int]] = {}  # s -> (next n, m)
    checked: dict[int, int] = {}

    def check_pairs(s, upto):
        k = checked.get(s, 1)
        while k < upto:
            lhs = combine([(1, fprime.eval(k, s)), (-hh(k, s), ONE)])
            rhs = combine([(1, fprime.eval(k + 1, s)), (-hh(k + 1, s), ONE)])
            if not loewner_leq(lhs, rhs):
                raise ScheduleViolation(f"input schedule fails at (n, s) = ({k}, {s})")
            k += 1
        checked[s] = max(checked.get(s, 1), upto)

    def least_l(m, n, s):
        target = two_pow(-n)
        hi, step = m + 1, 1
        while hbar(hi, s) > target:
            step *= 2
            hi = m + step
        lo = max(m + 1, hi - step // 2 if step > 1 else m + 1)
        while lo < hi:
            mid = (lo + hi) // 2
            if hbar(mid, s) <= target:
                hi = mid
            else:
                lo = mid + 1
        return hi

    def extend(s, k):
        segs = segments.setdefault(s, [])
        n, m = frontier.get(s, (1, 1))
        while not segs or segs[-1][1] < k:
            l = least_l(m, n, s)
            check_pairs(s, l)
            hl = hbar(l, s)
            assert hbar(m, s) > two_pow(-n)
            last = n
            while two_pow(-(last + 1)) >= hl:
                last += 1
            segs.append((n, last, m, l))
            n, m = last + 1, l
        frontier[s] = (n, m)
        return segs

    def locate(k, s):
        for seg in extend(s, k):
            if seg[0] <= k <= seg[1]:
                return seg
        raise AssertionError("segment search failed")

    def fn(k, s):
        _, _, m, l = locate(k, s)
        hm, hl = hbar(m, s), hbar(l, s)
        alpha = (hm - two_pow(-k)) / (hm - hl)
        return combine([(1 - alpha, fprime.eval(m, s)), (alpha, fprime.eval(l, s))])

    def gfn(k, s):
        _, _, m, l = locate(k, s)
        return max(gprime(m, s), gprime(l, s))

    return SemiPovmStream(fn, gfn, descriptor=descriptor or f"renormalized:{fprime.descriptor}",
                          space_dim=fprime.space_dim)


# -- constructions ------------------------------------------------------------------

def scalar_embed(r: SemiMeasureStream) -> SemiPovmStream:
    """eval(n, s) = r(n, s) I_n."""
    return SemiPovmStream(lambda n, s: identity_block(n, r.eval(n, s)),
                          lambda n, s: n, descriptor=f"scalar-embed:{r.descriptor}",
                          guarded=True)


def scalar_view(r: SemiMeasureStream) -> SemiPovmStream:
    """A semi-measure as a stream of 1x1 operators on a one-dimensional space."""
    return SemiPovmStream(lambda n, s: identity_block(1, r.eval(n, s)),
                          lambda n, s: 1, descriptor=f"scalar:{r.descriptor}",
                          guarded=True, space_dim=1)


def from_hilbert_schmidt(entries: Callable[[int], Mapping[tuple[int, int], object]],
                         hs_norm: Callable[[int], Fraction],
                         descriptor: str = "hilbert-schmidt") -> SemiPovmStream:
    """Stream for an operator family with finitely supported entries.

    ``entries(s)`` maps 1-based (i, j) to Gaussian rationals and must be
    Hermitian; ``hs_norm(s)`` is the exact Hilbert-Schmidt norm.  The block at
    stage n is the least g whose truncation leaves squared mass <= 2^(-2n-5);
    the value is the truncation plus 2^(-n-2) on that block.
    """
    cache: dict[int, tuple[list, Fraction]] = {}

    def family(s):
        got = cache.get(s)
        if got is None:
            ents = {k: RationalComplex.of(v if isinstance(v, RationalComplex) else rat(v))
                    for k, v in entries(s).items()}
            ents = {k: v for k, v in ents.items() if v}
            total = sum((v.abs2() for v in ents.values()), Fraction(0))
            norm = rat(hs_norm(s))
            if norm < 0 or norm * norm != total:
                raise NormMismatch(f"hs_norm({s})^2 = {norm * norm} but entries give {total}")
            # squared mass outside the g-block, as a function of g
            by_size = sorted(((max(i, j), v.abs2()) for (i, j), v in ents.items()))
            got = (ents, by_size, total)
            cache[s] = got
        return got

    def gfn(n, s):
        ents, by_size, total = family(s)
        bound = two_pow(-2 * n - 5)
        inside = Fraction(0)
        g = 1
        idx = 0
        while True:
            while idx < len(by_size) and by_size[idx][0] <= g:
                inside += by_size[idx][1]
                idx += 1
            if total - inside <= bound:
                return g
            g = by_size[idx][0]

    def fn(n, s):
        ents, _, _ = family(s)
        g = gfn(n, s)
        block = {(i - 1, j - 1): v for (i, j), v in ents.items() if i <= g and j <= g}
        trunc = BlockScalarOperator(RationalHermitian(g, block))
        return combine([(1, trunc), (two_pow(-n - 2), identity_block(g))])

    return SemiPovmStream(fn, gfn, descriptor=descriptor)


def projective_stream() -> SemiPovmStream:
    """The computable projective POVM P(s) = |e_s><e_s|."""
    return from_hilbert_schmidt(lambda s: {(s, s): 1}, lambda s: Fraction(1),
                                descriptor="projective")


def shift_mix(R: SemiPovmStream) -> SemiPovmStream:
    """f'(n,s) = 1/2 f(n+s, s) + 2^(-s-1) (1 - 2^-n) I(n+s, s).

    I(n, s) is the identity on the first G(n, s) basis vectors, where G is the
    running maximum of max(g(k, s), k) over k <= n (so I(n, s) increases to I);
    on a finite space the identity of that space is used.
    """
    gmax: dict[int, list[int]] = {}

    def G(n, s):
        if R.space_dim is not None:
            return R.space_dim
        seq = gmax.setdefault(s, [0])
        while len(seq) <= n:
            k = len(seq)
            seq.append(max(seq[-1], R.gbound(k, s), k))
        return seq[n]

    def fn(n, s):
        return combine([(Fraction(1, 2), R.eval(n + s, s)),
                        (two_pow(-s - 1) * (1 - two_pow(-n)), identity_block(G(n + s, s)))])

    return SemiPovmStream(fn, lambda n, s: G(n + s, s), descriptor=f"shift-mix:{R.descriptor}",
                          guarded=True, space_dim=R.space_dim)


def zero_povm_stream(space_dim: Optional[int] = None) -> SemiPovmStream:
    return SemiPovmStream(lambda n, s: zero_op(), lambda n, s: 1, descriptor="zero",
                          guarded=True, space_dim=space_dim)


# -- measurement ------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementDistribution:
    """Lower bounds p(s) for s in 1..window; the rest of the mass goes to w."""

    stage: int
    state: StateVector
    probs: tuple  # Fraction per s = 1..window
    residual: Fraction

    @property
    def window(self) -> int:
        return len(self.probs)

    def to_json(self) -> dict:
        return {"stage": self.stage, "state": self.state.to_json()["coefficients"],
                "outcomes": [{"s": from_index(s), "index": s, "p_num": str(p.numerator),
                              "p_den": str(p.denominator)}
                             for s, p in enumerate(self.probs, start=1)],
                "residual": fmt_rat(self.residual)}


def measurement_distribution(stream: SemiPovmStream, n: int, x: StateVector,
                             window: Optional[int] = None) -> MeasurementDistribution:
    """Certified per-outcome probability lower bounds at stage n.

    Guarded streams are monotone without slack, so <f(n,s)x, x> is already a
    lower bound; otherwise 2^-n is subtracted (and clipped at 0).
    """
    window = n if window is None else window
    probs = []
    for s in range(1, window + 1):
        q = quad_form(stream.eval(n, s), x)
        if not stream.guarded:
            q = max(q - two_pow(-n), Fraction(0))
        probs.append(q)
    residual = 1 - sum(probs, Fraction(0))
    if residual < 0:
        raise ValueError("outcome lower bounds sum above 1; the stream is not a semi-POVM")
    return MeasurementDistribution(n, x, tuple(probs), residual)


W = "w"
_SCALE = 1 << 64


def _thresholds(dist: MeasurementDistribution) -> list[int]:
    # outcome k is chosen when u < ceil(cum_k * 2^64), u a uniform 64-bit integer
    out, cum = [], Fraction(0)
    for p in dist.probs:
        cum += p
        t = cum * _SCALE
        out.append(-((-t.numerator) // t.denominator))
    return out


def _outcome(th: list[int], u: int):
    for s, t in enumerate(th, start=1):
        if u < t:
            return s
    return W


def raw_draws(seed: int, count: int, start: int = 0) -> np.ndarray:
    """64-bit words ``start .. start+count-1`` of the Philox4x64 stream keyed by seed."""
    bg = np.random.Philox(key=seed)
    block, lane = divmod(start, 4)
    if block:
        bg.advance(block)
    return bg.random_raw(lane + count)[lane:]


def sample_outcome(dist: MeasurementDistribution, seed: int, index: int = 0):
    """Outcome index (or ``W``) for draw number ``index`` under ``seed``."""
    u = int(raw_draws(seed, 1, index)[0])
    return _outcome(_thresholds(dist), u)


def sample_batch(dist: MeasurementDistribution, seed: int, count: int, start: int = 0) -> list:
    th = _thresholds(dist)
    return [_outcome(th, int(u)) for u in raw_draws(seed, count, start)]
