from fractions import Fraction as F

import pytest

from opait import ait
from opait.constructor import ConstructorConfig, Dovetailer, scalar_floor, universal_stream
from opait.linalg import BlockScalarOperator, NotPositiveDefinite, StateVector
from opait.machine import fixture_machine
from opait.rational import neg_log2_interval, Interval
from opait.semimeasure import validate_semimeasure
from opait.semipovm import two_pow, validate_semipovm, zero_povm_stream
from opait.strings import pair, to_index

EPS = F(1, 1 << 20)
PLANTS = ((2, "complexity:complexity"), (3, "projective"))
STATES = [
    StateVector.basis(1),
    StateVector.basis(3),
    StateVector((F(3, 5), F(4, 5))),
    StateVector((F(1, 2), F(1, 2), F(1, 2), F(1, 2))),
    StateVector((0, F(5, 13), 0, F(12, 13))),
]


@pytest.fixture(scope="module")
def dove():
    d = Dovetailer(ConstructorConfig(plants=PLANTS))
    d.advance_to(16)
    return d


@pytest.fixture(scope="module")
def floor_only():
    d = Dovetailer()
    d.advance_to(16)
    return d


def test_too_early_stage(dove):
    with pytest.raises(NotPositiveDefinite):
        ait.hhat_upper(dove, 4, 6, EPS)  # 2^-6 = c_4
    ait.hhat_upper(dove, 4, 7, EPS)


def test_floor_only_tail(floor_only):
    for s in (1, 2, 5):
        b = ait.hhat_upper(floor_only, s, 16, EPS)
        expect = neg_log2_interval(Interval.point(F(1, 2) * (scalar_floor(s) - two_pow(-16))), EPS)
        assert b.operator.tail.overlaps(expect)
        assert abs(b.operator.tail.mid - (s + 3)) < F(1, 100)


def test_hhat_nonincreasing_and_nonnegative(dove):
    for s in range(1, 9):
        prev = None
        for n in range(s + 3, 15):
            op = ait.hhat_upper(dove, s, n, EPS).operator
            m = op.dim
            assert all(op.entry(i, i).re.lo >= 0 for i in range(m))
            if prev is not None:
                mm = max(m, prev.dim)
                a, b = op.padded(mm), prev.padded(mm)
                for i in range(mm):
                    assert a.entry(i, i).re.lo <= b.entry(i, i).re.hi + 2 * EPS
            prev = op


def test_jensen_direction(dove):
    for s in range(1, 9):
        b = ait.hhat_upper(dove, s, 14, EPS)
        for x in STATES:
            enc, scalar = ait.jensen_check(b, x)
            assert enc.hi >= scalar.lo - EPS


def test_complexity_comparison(dove):
    m = fixture_machine("complexity")
    n = 14
    for bits in ["", "1", "00", "01"]:
        s = to_index(bits)
        k = m.complexity_upper(n, s)
        c = ait.complexity_constant(2, k, n, s, EPS)
        b = ait.hhat_upper(dove, s, n, EPS)
        for x in STATES:
            if x.support <= n:
                assert ait.quad_enclosure(b, x).lo <= k + c


def test_joint_within_transport_constant(dove):
    n, window = 16, 8
    c = ait.hhat_transport_constant(dove, ait.named_map("pair-with-empty"), n, EPS, window)
    for s in range(1, window + 1):
        if two_pow(-n) >= scalar_floor(pair(s, 1)):
            continue
        joint = ait.hhat_derived("joint", dove, s, 1, n, EPS)
        single = ait.hhat_upper(dove, s, n, EPS).operator
        assert ait.diagonal_gap(joint, single) <= c


def test_conditional_lower_bound(dove):
    n, window = 16, 13
    c = ait.hhat_transport_constant(dove, ait.named_map("first"), n, EPS, window)
    for s in range(1, 4):
        for t in range(1, 4):
            if two_pow(-n) >= scalar_floor(pair(t, s)):
                continue
            cond = ait.hhat_derived("conditional", dove, s, t, n, EPS)
            assert all(cond.entry(i, i).re.hi >= -c for i in range(cond.dim))


def test_mutual_self_near_single(dove):
    n = 16
    c_up = ait.hhat_transport_constant(dove, ait.named_map("pair-with-self"), n, EPS, 3)
    c_down = ait.hhat_transport_constant(dove, ait.named_map("first"), n, EPS, 13)
    for s in (1, 2, 3):
        mutual = ait.hhat_derived("mutual", dove, s, s, n, EPS)
        single = ait.hhat_upper(dove, s, n, EPS).operator
        # mutual(s;s) - H(s) = H(s) - H(<s,s>), which lies in [-c_up, c_down]
        m = max(mutual.dim, single.dim)
        a, b = mutual.padded(m), single.padded(m)
        for i in range(m):
            hi = a.entry(i, i).re.hi - b.entry(i, i).re.lo
            lo = a.entry(i, i).re.lo - b.entry(i, i).re.hi
            assert hi >= -c_up - 4 * EPS and lo <= c_down + 4 * EPS


def test_unknown_derived_kind(dove):
    with pytest.raises(ValueError):
        ait.hhat_derived("bogus", dove, 1, 1, 10, EPS)


# -- transport -----------------------------------------------------------------------------

def test_transport_identity(dove):
    out, rep = ait.psi_transport(ait.named_map("identity"), universal_stream(dove), witness_grid=6)
    assert validate_semipovm(out, 10).ok and rep.ok


def test_transport_swap(dove):
    out, rep = ait.psi_transport(ait.named_map("swap"), universal_stream(dove), witness_grid=8)
    assert validate_semipovm(out, 12).ok and rep.ok and rep.witnesses


def test_transport_empty_domain(dove):
    out, rep = ait.psi_transport(ait.named_map("empty"), universal_stream(dove), witness_grid=5)
    assert all(out.eval(n, s) == BlockScalarOperator.zero() for n in range(1, 8) for s in range(1, 8))
    assert rep.witnesses == []


def test_transport_vm_map(dove):
    # a VM program that ignores its input and prints "0"
    from opait.machine import assemble
    psi = ait.named_map("vm:" + assemble(["EMIT0", "HALT"]))
    dom = ait.DomainEnumeration(psi)
    assert dom.preimages(4, 2) == [1, 2, 3, 4]


def test_state_pairing_zero():
    r = ait.state_pairing(zero_povm_stream(), StateVector.basis(1))
    assert all(r.eval(n, s) == 0 for n in range(1, 6) for s in range(1, 6))


def test_state_pairing_universal(dove):
    r = ait.state_pairing(universal_stream(dove), StateVector.basis(1))
    assert validate_semimeasure(r, 12).ok


def test_state_pairing_floor(floor_only):
    x = StateVector((F(3, 5), F(4, 5)))
    r = ait.state_pairing(universal_stream(floor_only), x)
    for n in range(3, 14):
        for s in range(1, n + 1):
            # the floor gives c_s (1 - 2^-n) on x, then 2^-n slack comes off
            bound = scalar_floor(s) * (1 - two_pow(-n)) - two_pow(-n)
            assert r.eval(n, s) >= bound


def test_named_maps():
    with pytest.raises(ValueError):
        ait.named_map("nope")
    assert ait.named_map("first")(pair(5, 9), 1) == 5
