import random
from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from opait.linalg import RationalHermitian, BlockScalarOperator
from opait.rational import RationalComplex

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

small_rat = st.fractions(min_value=-3, max_value=3, max_denominator=6)


@st.composite
def hermitian(draw, max_dim=4, complex_=True):
    m = draw(st.integers(1, max_dim))
    ents = {}
    for i in range(m):
        ents[(i, i)] = RationalComplex(draw(small_rat))
        for j in range(i + 1, m):
            im = draw(small_rat) if complex_ else Fraction(0)
            v = RationalComplex(draw(small_rat), im)
            ents[(i, j)] = v
            ents[(j, i)] = v.conjugate()
    return RationalHermitian(m, ents)


@st.composite
def gram(draw, max_dim=4):
    """C C* for a random (possibly rank-deficient) C: always PSD."""
    m = draw(st.integers(1, max_dim))
    r = draw(st.integers(1, m))
    c = [[RationalComplex(draw(small_rat), draw(small_rat)) for _ in range(r)] for _ in range(m)]
    ents = {}
    for i in range(m):
        for j in range(m):
            acc = RationalComplex(0)
            for k in range(r):
                acc = acc + c[i][k] * c[j][k].conjugate()
            ents[(i, j)] = acc
    return RationalHermitian(m, ents)


def operators(max_dim=4):
    return st.builds(BlockScalarOperator, st.one_of(hermitian(max_dim), gram(max_dim)),
                     st.fractions(min_value=-1, max_value=2, max_denominator=4))


def random_block(rng: random.Random, m: int, psd_bias: bool) -> RationalHermitian:
    """Random Gaussian-rational Hermitian block; half of them shifted toward the PSD boundary."""
    def q():
        return Fraction(rng.randint(-6, 6), rng.randint(1, 4))

    if psd_bias:
        r = rng.randint(1, m)
        c = [[RationalComplex(q(), q() if rng.random() < 0.5 else 0) for _ in range(r)]
             for _ in range(m)]
        ents = {}
        for i in range(m):
            for j in range(m):
                acc = RationalComplex(0)
                for k in range(r):
                    acc = acc + c[i][k] * c[j][k].conjugate()
                ents[(i, j)] = acc
        if rng.random() < 0.5:
            # nudge a diagonal entry down so some become indefinite
            i = rng.randrange(m)
            ents[(i, i)] = ents[(i, i)] - RationalComplex(Fraction(rng.randint(0, 3), 8))
        return RationalHermitian(m, ents)
    ents = {}
    for i in range(m):
        ents[(i, i)] = RationalComplex(q())
        for j in range(i + 1, m):
            v = RationalComplex(q(), q() if rng.random() < 0.5 else 0)
            ents[(i, j)] = v
            ents[(j, i)] = v.conjugate()
    return RationalHermitian(m, ents)


def to_numpy(b: RationalHermitian):
    import numpy as np
    return np.array([[complex(float(v.re), float(v.im)) for v in row] for row in b.rows()])


@pytest.fixture
def rng():
    return random.Random(20240611)
