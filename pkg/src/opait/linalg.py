"""Exact Hermitian operators on the standard basis of l2.

Operators are ``block (+) tail*I``: a finite Hermitian block on e_1..e_m with
Gaussian-rational entries, plus a rational scalar acting on every e_k with
k > m.  Positivity is decided exactly, by the signs of the characteristic
polynomial coefficients; the all-principal-minors test is kept alongside as an
independent route.  The spectral calculus returns rational interval
enclosures.

Block entries are stored sparsely (0-based index pairs, both triangles).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from . import poly
from .rational import (
    CInterval,
    Interval,
    RationalComplex,
    ZERO_IV,
    fmt_rat,
    neg_log2_interval,
    parse_rat,
    rat,
)

ZERO = RationalComplex(0, 0)
Entries = Mapping[tuple[int, int], RationalComplex]


class NotPositiveDefinite(ValueError):
    """Raised when a logarithm is requested of an operator that is not > 0."""


class NotNormalized(ValueError):
    """Raised for a state vector whose squared norm is not exactly 1."""


class NotHermitian(ValueError):
    pass


# -- Hermitian blocks --------------------------------------------------------

class RationalHermitian:
    """Finite Hermitian matrix with Gaussian-rational entries."""

    __slots__ = ("dim", "_entries", "_hash")

    def __init__(self, dim: int, entries: Entries | None = None, *, check: bool = True):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        clean: dict[tuple[int, int], RationalComplex] = {}
        for (i, j), v in (entries or {}).items():
            v = RationalComplex.of(v)
            if v:
                if not (0 <= i < dim and 0 <= j < dim):
                    raise IndexError(f"entry ({i}, {j}) outside {dim}x{dim}")
                clean[(i, j)] = v
        if check:
            for (i, j), v in clean.items():
                if clean.get((j, i), ZERO) != v.conjugate():
                    raise NotHermitian(f"entry ({i}, {j}) breaks Hermitian symmetry")
        self._entries = clean
        self._hash = None

    # construction helpers
    @classmethod
    def zeros(cls, dim: int) -> "RationalHermitian":
        return cls(dim, {}, check=False)

    @classmethod
    def identity(cls, dim: int, scale=1) -> "RationalHermitian":
        scale = rat(scale)
        return cls(dim, {(i, i): RationalComplex(scale) for i in range(dim)}, check=False)

    @classmethod
    def diag(cls, values: Sequence) -> "RationalHermitian":
        return cls(len(values), {(i, i): RationalComplex(rat(v)) for i, v in enumerate(values)},
                   check=False)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RationalHermitian":
        m = len(rows)
        ents = {}
        for i, row in enumerate(rows):
            if len(row) != m:
                raise ValueError("matrix must be square")
            for j, v in enumerate(row):
                if isinstance(v, tuple):
                    v = RationalComplex(*v)
                ents[(i, j)] = RationalComplex.of(v if isinstance(v, RationalComplex) else rat(v))
        return cls(m, ents)

    # access
    def entry(self, i: int, j: int) -> RationalComplex:
        return self._entries.get((i, j), ZERO)

    def items(self):
        return self._entries.items()

    def keys(self):
        return self._entries.keys()

    def nnz(self) -> int:
        return len(self._entries)

    def is_real(self) -> bool:
        return all(v.im == 0 for v in self._entries.values())

    def is_diagonal(self) -> bool:
        return all(i == j for i, j in self._entries)

    def rows(self) -> list[list[RationalComplex]]:
        return [[self.entry(i, j) for j in range(self.dim)] for i in range(self.dim)]

    def padded(self, dim: int, fill) -> "RationalHermitian":
        """Enlarge to ``dim`` with ``fill`` on the new diagonal positions."""
        if dim < self.dim:
            raise ValueError("cannot shrink a block by padding")
        ents = dict(self._entries)
        fill = RationalComplex.of(rat(fill))
        if fill:
            for k in range(self.dim, dim):
                ents[(k, k)] = fill
        return RationalHermitian(dim, ents, check=False)

    def __eq__(self, other):
        if not isinstance(other, RationalHermitian):
            return NotImplemented
        return self.dim == other.dim and self._entries == other._entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._entries.items())))
        return self._hash

    def __repr__(self):
        if self.is_diagonal() and self.is_real():
            return f"RationalHermitian.diag({[str(self.entry(i, i).re) for i in range(self.dim)]})"
        return f"RationalHermitian({self.dim}, nnz={self.nnz()})"

    def components(self) -> list[list[int]]:
        """Index sets of the connected components of the sparsity graph."""
        parent = list(range(self.dim))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for (i, j) in self._entries:
            if i != j:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
        groups: dict[int, list[int]] = {}
        for k in range(self.dim):
            groups.setdefault(find(k), []).append(k)
        return sorted(groups.values())

    def dense(self, idx: Sequence[int] | None = None) -> list[list]:
        """Dense principal submatrix, over Q when all entries are real."""
        if idx is None:
            idx = range(self.dim)
        idx = list(idx)
        real = all(self.entry(i, j).im == 0 for i in idx for j in idx)
        if real:
            return [[self.entry(i, j).re for j in idx] for i in idx]
        return [[self.entry(i, j) for j in idx] for i in idx]

    def to_json(self) -> dict:
        upper = [self.entry(i, j).to_json() for i in range(self.dim) for j in range(i, self.dim)]
        return {"dim": self.dim, "upper": upper}

    @classmethod
    def from_json(cls, obj: dict) -> "RationalHermitian":
        m = int(obj["dim"])
        upper = obj["upper"]
        if len(upper) != m * (m + 1) // 2:
            raise ValueError("upper triangle has the wrong length")
        ents = {}
        it = iter(upper)
        for i in range(m):
            for j in range(i, m):
                v = RationalComplex.from_json(next(it))
                if i == j and v.im != 0:
                    raise NotHermitian("diagonal entries must be real")
                if v:
                    ents[(i, j)] = v
                    ents[(j, i)] = v.conjugate()
        return cls(m, ents, check=False)


# -- block (+) scalar operators ----------------------------------------------

@dataclass(frozen=True)
class BlockScalarOperator:
    """``block`` on e_1..e_m, ``tail`` times identity on the rest."""

    block: RationalHermitian
    tail: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "tail", rat(self.tail))

    @property
    def dim(self) -> int:
        return self.block.dim

    @classmethod
    def identity(cls) -> "BlockScalarOperator":
        return cls(RationalHermitian.identity(1), Fraction(1))

    @classmethod
    def zero(cls) -> "BlockScalarOperator":
        return cls(RationalHermitian.zeros(1), Fraction(0))

    @classmethod
    def square(cls, block: RationalHermitian) -> "BlockScalarOperator":
        """An m-square operator: ``block`` with zero tail."""
        return cls(block, Fraction(0))

    @classmethod
    def projector(cls, dim: int, scale=1) -> "BlockScalarOperator":
        """scale * I_dim (identity on the first ``dim`` basis vectors)."""
        return cls(RationalHermitian.identity(dim, scale), Fraction(0))

    def entry(self, i: int, j: int) -> RationalComplex:
        if i < self.dim and j < self.dim:
            return self.block.entry(i, j)
        return RationalComplex(self.tail) if i == j else ZERO

    def is_square(self, m: int | None = None) -> bool:
        """True if this is an m-square operator (zero outside the m-block)."""
        if self.tail != 0:
            return False
        if m is None:
            return True
        return all(i < m and j < m for (i, j) in self.block.keys())

    def support_dim(self) -> int:
        """Smallest m for which the operator is m-square (tail must be 0)."""
        return 1 + max((max(i, j) for (i, j) in self.block.keys()), default=0)

    def trimmed(self) -> "BlockScalarOperator":
        """Drop trailing block rows that merely repeat the tail."""
        m = self.dim
        while m > 1:
            k = m - 1
            row = [(i, j) for (i, j) in self.block.keys() if i == k or j == k]
            if row == [(k, k)] and self.block.entry(k, k) == self.tail:
                m -= 1
            elif not row and self.tail == 0:
                m -= 1
            else:
                break
        if m == self.dim:
            return self
        ents = {(i, j): v for (i, j), v in self.block.items() if i < m and j < m}
        return BlockScalarOperator(RationalHermitian(m, ents, check=False), self.tail)

    def __eq__(self, other):
        if not isinstance(other, BlockScalarOperator):
            return NotImplemented
        m = max(self.dim, other.dim)
        a = self.block.padded(m, self.tail)
        b = other.block.padded(m, other.tail)
        return self.tail == other.tail and a == b

    def __hash__(self):
        t = self.trimmed()
        return hash((t.block, t.tail))

    def __add__(self, other):
        return combine([(1, self), (1, other)])

    def __sub__(self, other):
        return combine([(1, self), (-1, other)])

    def __rmul__(self, c):
        return combine([(c, self)])

    def __repr__(self):
        return f"BlockScalarOperator({self.block!r}, tail={self.tail})"

    def to_json(self) -> dict:
        return {"block": self.block.to_json(), "tail": fmt_rat(self.tail)}

    @classmethod
    def from_json(cls, obj: dict) -> "BlockScalarOperator":
        return cls(RationalHermitian.from_json(obj["block"]), parse_rat(obj["tail"]))


def combine(terms: Iterable[tuple]) -> BlockScalarOperator:
    """Exact linear combination sum(c_i * A_i).

    Blocks of different sizes are padded with their own tail scalar on the
    missing diagonal positions, so each term is the same operator on l2.
    """
    terms = [(rat(c), A) for c, A in terms]
    if not terms:
        raise ValueError("combine needs at least one term")
    m = max(A.dim for _, A in terms)
    acc: dict[tuple[int, int], RationalComplex] = {}
    tail = Fraction(0)
    for c, A in terms:
        if c == 0:
            continue
        tail += c * A.tail
        for key, v in A.block.items():
            prev = acc.get(key)
            acc[key] = v * c if prev is None else prev + v * c
        if A.tail and A.dim < m:
            t = RationalComplex(c * A.tail)
            for k in range(A.dim, m):
                prev = acc.get((k, k))
                acc[(k, k)] = t if prev is None else prev + t
    return BlockScalarOperator(RationalHermitian(m, acc, check=False), tail)


# -- characteristic polynomials ----------------------------------------------

def _identity_like(n, one):
    return [[one if i == j else one * 0 for j in range(n)] for i in range(n)]


def _charpoly_hessenberg(a: list[list]) -> list:
    """Monic char poly of a dense matrix over a field (highest degree first).

    Similarity reduction to upper Hessenberg form followed by the standard
    three-term recurrence; O(n^3) field operations.
    """
    n = len(a)
    h = [list(r) for r in a]
    for m in range(1, n - 1):
        piv = next((i for i in range(m, n) if h[i][m - 1] != 0), None)
        if piv is None:
            continue
        if piv != m:
            h[piv], h[m] = h[m], h[piv]
            for r in h:
                r[piv], r[m] = r[m], r[piv]
        t = h[m][m - 1]
        for i in range(m + 1, n):
            u = h[i][m - 1] / t
            if u != 0:
                hm, hi = h[m], h[i]
                for j in range(n):
                    if hm[j] != 0:
                        hi[j] = hi[j] - u * hm[j]
                for r in h:
                    if r[i] != 0:
                        r[m] = r[m] + u * r[i]
    # p_k as coefficient lists, lowest degree first
    zero = h[0][0] * 0 if n else Fraction(0)
    ps = [[zero + 1]]
    for k in range(1, n + 1):
        prev = ps[k - 1]
        hk = h[k - 1][k - 1]
        nxt = [zero] * (k + 1)
        for d, c in enumerate(prev):
            nxt[d + 1] = nxt[d + 1] + c
            nxt[d] = nxt[d] - hk * c
        t = zero + 1
        for i in range(k - 1, 0, -1):
            t = t * h[i][i - 1]
            if t == 0:
                break
            coef = h[i - 1][k - 1] * t
            if coef != 0:
                for d, c in enumerate(ps[i - 1]):
                    nxt[d] = nxt[d] - coef * c
        ps.append(nxt)
    return list(reversed(ps[n]))


def _charpoly_leverrier(a: list[list]) -> list:
    """Faddeev-LeVerrier; O(n^4), used as a cross-check."""
    n = len(a)
    zero = a[0][0] * 0
    coeffs = [zero] * (n + 1)
    coeffs[n] = zero + 1
    mk = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        am = [[sum((a[i][l] * mk[l][j] for l in range(n)), zero) for j in range(n)]
              for i in range(n)]
        for i in range(n):
            am[i][i] = am[i][i] + coeffs[n - k + 1]
        mk = am
        amk = [[sum((a[i][l] * mk[l][j] for l in range(n)), zero) for j in range(n)]
               for i in range(n)]
        tr = sum((amk[i][i] for i in range(n)), zero)
        coeffs[n - k] = -tr / k
    return list(reversed(coeffs))


def _real_coeffs(cs: list) -> list[Fraction]:
    out = []
    for c in cs:
        if isinstance(c, RationalComplex):
            if c.im != 0:
                raise NotHermitian("characteristic polynomial has a non-real coefficient")
            c = c.re
        out.append(Fraction(c))
    return out


def char_poly(b: RationalHermitian, method: str = "hessenberg") -> list[Fraction]:
    """Monic characteristic polynomial det(xI - B), highest degree first.

    Computed per connected component of the sparsity pattern and multiplied
    together.  ``method`` is ``"hessenberg"`` or ``"leverrier"``.
    """
    fn = {"hessenberg": _charpoly_hessenberg, "leverrier": _charpoly_leverrier}[method]
    out = [Fraction(1)]
    for comp in b.components():
        if len(comp) == 1:
            d = b.entry(comp[0], comp[0]).re
            out = poly.multiply(out, [Fraction(1), -d])
        else:
            out = poly.multiply(out, _real_coeffs(fn(b.dense(comp))))
    return out


def _coeffs_psd(cp: Sequence[Fraction]) -> bool:
    # det(xI - B) = sum (-1)^k e_k x^(m-k); PSD iff every e_k >= 0
    return all((c if k % 2 == 0 else -c) >= 0 for k, c in enumerate(cp))


def block_is_psd(b: RationalHermitian) -> bool:
    for comp in b.components():
        if len(comp) == 1:
            if b.entry(comp[0], comp[0]).re < 0:
                return False
        else:
            cp = _real_coeffs(_charpoly_hessenberg(b.dense(comp)))
            if not _coeffs_psd(cp):
                return False
    return True


def is_psd(a: BlockScalarOperator) -> bool:
    """A >= 0 on all of l2: tail >= 0 and block positive semi-definite."""
    return a.tail >= 0 and block_is_psd(a.block)


def loewner_leq(a: BlockScalarOperator, b: BlockScalarOperator) -> bool:
    """A <= B in the Loewner order."""
    return is_psd(combine([(1, b), (-1, a)]))


# -- principal-minors route ---------------------------------------------------

def determinant(a: list[list]):
    """Exact determinant by Gaussian elimination over the entry field."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    m = [list(r) for r in a]
    det = m[0][0] * 0 + 1
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return m[0][0] * 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        p = m[c][c]
        det = det * p
        for r in range(c + 1, n):
            f = m[r][c] / p
            if f != 0:
                for k in range(c, n):
                    m[r][k] = m[r][k] - f * m[c][k]
    return det


def principal_minors_psd(b: RationalHermitian) -> bool:
    """PSD test through all 2^m - 1 principal minors (exponential; oracle)."""
    rows = b.dense()
    n = b.dim
    for k in range(1, n + 1):
        for idx in combinations(range(n), k):
            d = determinant([[rows[i][j] for j in idx] for i in idx])
            if isinstance(d, RationalComplex):
                d = d.re
            if d < 0:
                return False
    return True


def is_psd_minors(a: BlockScalarOperator) -> bool:
    return a.tail >= 0 and principal_minors_psd(a.block)


# -- eigenvalue enclosures -----------------------------------------------------

def _component_roots(b: RationalHermitian, comp: list[int], eps: Fraction):
    """[(enclosure, multiplicity)] for one component, exact where possible."""
    if len(comp) == 1:
        return [(Interval.point(b.entry(comp[0], comp[0]).re), 1)]
    cp = _real_coeffs(_charpoly_hessenberg(b.dense(comp)))
    out = []
    for q, mult in poly.squarefree_decomposition(cp):
        if poly.degree(q) == 1:
            out.append((Interval.point(-q[1] / q[0]), mult))
            continue
        for iv in poly.isolate_real_roots(q, eps):
            out.append((iv, mult))
    return out


def eig_enclose(b: RationalHermitian, eps) -> list[Interval]:
    """Eigenvalue enclosures of width <= eps, listed with multiplicity."""
    eps = rat(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = []
    for comp in b.components():
        for iv, mult in _component_roots(b, comp, eps):
            out.extend([iv] * mult)
    out.sort(key=lambda iv: (iv.lo, iv.hi))
    return out


# -- state vectors and quadratic forms -----------------------------------------

@dataclass(frozen=True)
class StateVector:
    """Unit vector sum c_i e_i with finitely many nonzero Gaussian-rational c_i."""

    coeffs: tuple = field()

    def __post_init__(self):
        cs = tuple(RationalComplex.of(c if isinstance(c, RationalComplex) else rat(c))
                   for c in self.coeffs)
        if not cs:
            raise NotNormalized("state not normalized")
        object.__setattr__(self, "coeffs", cs)
        if sum(c.abs2() for c in cs) != 1:
            raise NotNormalized("state not normalized")

    @classmethod
    def basis(cls, k: int) -> "StateVector":
        """e_k, 1-based."""
        if k < 1:
            raise ValueError("basis index is 1-based")
        return cls(tuple([0] * (k - 1) + [1]))

    @property
    def support(self) -> int:
        return len(self.coeffs)

    def mass_within(self, m: int) -> Fraction:
        """Squared norm of the component on e_1..e_m."""
        return sum((c.abs2() for c in self.coeffs[:m]), Fraction(0))

    def to_json(self) -> dict:
        return {"coefficients": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "StateVector":
        if isinstance(obj, dict):
            obj = obj["coefficients"]
        return cls(tuple(RationalComplex.from_json(c) for c in obj))

    def __str__(self):
        return "(" + ", ".join(fmt_complex(c) for c in self.coeffs) + ")"


def fmt_complex(c: RationalComplex) -> str:
    if c.im == 0:
        return str(c.re)
    return f"{c.re}{'+' if c.im >= 0 else '-'}{abs(c.im)}i"


def quad_form(a: BlockScalarOperator, x: StateVector) -> Fraction:
    """Exact <A x, x> = x* A x."""
    cs = x.coeffs
    k = len(cs)
    acc = RationalComplex(0)
    for (i, j), v in a.block.items():
        if i < k and j < k:
            ci, cj = cs[i], cs[j]
            if ci and cj:
                acc = acc + ci.conjugate() * v * cj
    if acc.im != 0:
        raise NotHermitian("quadratic form is not real")
    outside = sum((c.abs2() for c in cs[a.dim:]), Fraction(0))
    return acc.re + a.tail * outside


# -- interval operators --------------------------------------------------------

class IntervalHermitian:
    """Entrywise enclosure of a block (+) scalar Hermitian operator."""

    def __init__(self, dim: int, entries: Mapping[tuple[int, int], CInterval], tail: Interval):
        self.dim = dim
        self._entries = {k: v for k, v in entries.items()
                         if not (v.re == ZERO_IV and v.im == ZERO_IV)}
        for (i, j), v in list(self._entries.items()):
            if i == j and v.im != ZERO_IV:
                raise NotHermitian("diagonal enclosure must be real")
        self.tail = tail

    def entry(self, i: int, j: int) -> CInterval:
        if i < self.dim and j < self.dim:
            return self._entries.get((i, j), CInterval(ZERO_IV))
        return CInterval(self.tail) if i == j else CInterval(ZERO_IV)

    def diagonal(self) -> list[Interval]:
        return [self.entry(i, i).re for i in range(self.dim)]

    def max_width(self) -> Fraction:
        return max([self.tail.width] + [v.width for v in self._entries.values()])

    def padded(self, dim: int) -> "IntervalHermitian":
        ents = dict(self._entries)
        for k in range(self.dim, dim):
            ents[(k, k)] = CInterval(self.tail)
        return IntervalHermitian(dim, ents, self.tail)

    def contains(self, a: BlockScalarOperator) -> bool:
        m = max(self.dim, a.dim)
        return (self.tail.contains(a.tail)
                and all(self.entry(i, j).contains(a.entry(i, j))
                        for i in range(m) for j in range(m)))

    def _lin(self, other: "IntervalHermitian", sign: int) -> "IntervalHermitian":
        m = max(self.dim, other.dim)
        a, b = self.padded(m), other.padded(m)
        keys = set(a._entries) | set(b._entries)
        ents = {}
        for k in keys:
            ents[k] = a.entry(*k) + b.entry(*k) if sign > 0 else a.entry(*k) - b.entry(*k)
        tail = a.tail + b.tail if sign > 0 else a.tail - b.tail
        return IntervalHermitian(m, ents, tail)

    def __add__(self, other):
        return self._lin(other, 1)

    def __sub__(self, other):
        return self._lin(other, -1)

    def quad_form(self, x: StateVector) -> Interval:
        """Enclosure of <E x, x> over every Hermitian E in the enclosure."""
        cs = x.coeffs
        k = len(cs)
        acc = Interval.point(0)
        for (i, j), v in self._entries.items():
            if i < k and j < k and cs[i] and cs[j]:
                w = cs[i].conjugate() * cs[j]
                acc = acc + (v.re * w.re - v.im * w.im)
        outside = sum((c.abs2() for c in cs[self.dim:]), Fraction(0))
        return acc + self.tail * outside

    def to_json(self) -> dict:
        upper = [self.entry(i, j).to_json() for i in range(self.dim) for j in range(i, self.dim)]
        return {"dim": self.dim, "upper": upper, "tail": self.tail.to_json()}


def _cmat_mul(a, b, bits):
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = CInterval(ZERO_IV)
            for k in range(n):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc.outward(bits))
        out.append(row)
    return out


def _sylvester(dense_rows, roots: list[Interval], fvals: list[Interval], bits: int):
    """sum_i f(mu_i) prod_{j != i} (B - mu_j)/(mu_i - mu_j) in interval arithmetic."""
    n = len(dense_rows)
    bmat = [[CInterval.point(v) for v in row] for row in dense_rows]
    total = [[CInterval(ZERO_IV) for _ in range(n)] for _ in range(n)]
    for i, (mu_i, f_i) in enumerate(zip(roots, fvals)):
        prod = None
        denom = Interval.point(1)
        for j, mu_j in enumerate(roots):
            if j == i:
                continue
            shifted = [[bmat[r][c] - (CInterval(mu_j) if r == c else CInterval(ZERO_IV))
                        for c in range(n)] for r in range(n)]
            prod = shifted if prod is None else _cmat_mul(prod, shifted, bits)
            denom = denom * (mu_i - mu_j)
        scale = (f_i / denom).outward(bits)
        for r in range(n):
            for c in range(n):
                total[r][c] = (total[r][c] + prod[r][c] * scale).outward(bits)
    return total


def _neg_log2_component(b: RationalHermitian, comp: list[int], eps: Fraction):
    """Enclosure entries {(i, j): CInterval} of -log2 on one component."""
    if len(comp) == 1:
        d = b.entry(comp[0], comp[0]).re
        if d <= 0:
            raise NotPositiveDefinite("block is not positive definite")
        return {(comp[0], comp[0]): CInterval(neg_log2_interval(Interval.point(d), eps))}
    cp = _real_coeffs(_charpoly_hessenberg(b.dense(comp)))
    sqf = poly.divmod_poly(cp, poly.gcd(cp, poly.derivative(cp)))[0]
    isolator = poly.RootIsolator(sqf)
    roots = isolator.isolate(Fraction(1, 4))
    if not all((c if k % 2 == 0 else -c) > 0 for k, c in enumerate(cp)):
        raise NotPositiveDefinite("block is not positive definite")
    if len(roots) == 1:
        # a Hermitian matrix with a single eigenvalue is a scalar matrix
        mu = b.entry(comp[0], comp[0]).re
        f = neg_log2_interval(Interval.point(mu), eps)
        return {(k, k): CInterval(f) for k in comp}
    dense = b.dense(comp)
    width = eps
    for _ in range(200):
        roots = [_refine_to(isolator, iv, width) for iv in roots]
        roots = _separate(isolator, roots)
        roots = [_refine_positive(isolator, iv) for iv in roots]
        fvals = [neg_log2_interval(iv, width) for iv in roots]
        bits = max(64, 2 * (1 / width).numerator.bit_length())
        res = _sylvester(dense, roots, fvals, bits)
        if all(res[r][c].width <= eps for r in range(len(comp)) for c in range(r, len(comp))):
            out = {}
            for r, gi in enumerate(comp):
                for c, gj in enumerate(comp):
                    if c < r:
                        continue
                    v = res[r][c]
                    if r == c:
                        v = CInterval(v.re)  # exact imaginary part is 0
                    out[(gi, gj)] = v
                    if r != c:
                        out[(gj, gi)] = v.conjugate()
            return out
        width /= 16
    raise RuntimeError("spectral enclosure failed to reach the requested width")


def _refine_to(isolator, iv: Interval, width: Fraction) -> Interval:
    while iv.width > width:
        iv = isolator.refine(iv)
    return iv


def _refine_positive(isolator, iv: Interval) -> Interval:
    # every root is known to be positive; shrink until the enclosure is too
    while iv.lo <= 0:
        iv = isolator.refine(iv)
    return iv


def _separate(isolator, roots: list[Interval]) -> list[Interval]:
    """Refine until closed enclosures are pairwise disjoint."""
    roots = sorted(roots, key=lambda iv: iv.lo)
    changed = True
    while changed:
        changed = False
        for k in range(len(roots) - 1):
            if roots[k].hi >= roots[k + 1].lo:
                roots[k] = isolator.refine(roots[k])
                roots[k + 1] = isolator.refine(roots[k + 1])
                changed = True
    return roots


def spectral_neg_log2(a: BlockScalarOperator, eps) -> IntervalHermitian:
    """Entrywise enclosure of -log2(A) for A > 0, entry widths <= eps."""
    eps = rat(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if a.tail <= 0:
        raise NotPositiveDefinite("tail scalar must be positive")
    ents = {}
    for comp in a.block.components():
        ents.update(_neg_log2_component(a.block, comp, eps))
    tail = neg_log2_interval(Interval.point(a.tail), eps)
    return IntervalHermitian(a.dim, ents, tail)
