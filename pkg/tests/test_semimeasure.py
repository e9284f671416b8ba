from fractions import Fraction as F

import pytest

from opait.constructor import universal_mixture
from opait.machine import fixture_machine, universal_vm
from opait.semimeasure import (
    IncreasingSequence,
    MassExceeded,
    SemiMeasureStream,
    constant_stream,
    corroborate_domination,
    from_increasing_sequence,
    stream_from_complexity,
    stream_from_pv,
    to_csv,
    to_increasing_sequence,
    validate_semimeasure,
    zero_stream,
)

KRAFT = fixture_machine("kraft")
CPLX = fixture_machine("complexity")


def test_pv_stream_fixture():
    r = stream_from_pv(CPLX)
    # "" is produced by the 1-bit program 0, found at stage 1
    assert [r.eval(n, "") for n in (1, 2, 5)] == [F(1, 2)] * 3


def test_pv_stream_vm_monotone():
    r = stream_from_pv(universal_vm())
    assert validate_semimeasure(r, 20).ok
    for n in range(1, 20):
        assert sum(r.eval(n, s) for s in range(1, n + 1)) <= universal_vm().omega_lower(n) <= 1


def test_complexity_stream():
    r = stream_from_complexity(CPLX)
    assert r.eval(6, "00") == 0
    assert all(r.eval(n, "00") == F(1, 8) for n in range(7, 12))
    pv = stream_from_pv(CPLX)
    for s in range(1, 8):
        assert r.eval(20, s) <= pv.eval(20, s)


@pytest.mark.parametrize("machine", [KRAFT, CPLX, universal_vm()], ids=lambda m: m.name)
def test_machine_streams_validate(machine):
    machine.enumerate_halting(24)  # one enumeration serves every smaller stage
    assert validate_semimeasure(stream_from_pv(machine), 24).ok
    assert validate_semimeasure(stream_from_complexity(machine), 24).ok


def test_validator_catches_monotonicity_break():
    bad = SemiMeasureStream(lambda n, s: F(1, 4) if (n == 1 and s == 2) else F(0), "drop")
    rep = validate_semimeasure(bad, 4)
    assert [(v.kind, v.witness) for v in rep.violations] == [("monotonicity", (1, 2, 2))]


def test_validator_catches_mass_break():
    vals = {1: F(1, 2), 2: F(3, 8), 3: F(1, 4)}  # sums to 9/8
    bad = constant_stream(lambda s: vals.get(s, F(0)), "heavy")
    rep = validate_semimeasure(bad, 4)
    assert ("mass", (3,)) in [(v.kind, v.witness) for v in rep.violations]


def test_validator_catches_negative():
    bad = constant_stream(lambda s: F(-1, 8) if s == 2 else F(0))
    assert [v.kind for v in validate_semimeasure(bad, 3).violations] == ["negative"] * 3


def test_increasing_sequence_examples():
    assert [to_increasing_sequence(zero_stream()).eval(n) for n in range(1, 5)] == [0] * 4
    geo = constant_stream(lambda s: F(1, 2 ** s))
    a = to_increasing_sequence(geo)
    assert [a.eval(n) for n in range(1, 10)] == [1 - F(1, 2 ** n) for n in range(1, 10)]


def test_mixture_partial_mass_nondecreasing():
    a = to_increasing_sequence(universal_mixture())
    vals = [a.eval(n) for n in range(1, 21)]
    assert vals == sorted(vals) and vals[-1] <= 1


def test_from_sequence_geometric():
    r = from_increasing_sequence(IncreasingSequence(lambda n: 1 - F(1, 2 ** n)), 1)
    assert r.eval(1, 1) == 0
    assert all(r.eval(n, s) == F(1, 2 ** s) for n in (1, 7) for s in range(2, 30))
    assert sum(r.eval(1, s) for s in range(1, 64)) == F(1, 2) - F(1, 2 ** 63)


def test_from_sequence_constant():
    r = from_increasing_sequence(lambda n: F(1, 3), 1)
    assert all(r.eval(3, s) == 0 for s in range(1, 20))


def test_from_sequence_omega():
    vm = universal_vm()
    r = from_increasing_sequence(IncreasingSequence(vm.omega_lower), 1, check_upto=20)
    assert validate_semimeasure(r, 20).ok


def test_from_sequence_bad_d():
    with pytest.raises(MassExceeded):
        from_increasing_sequence(lambda n: F(n), 1)


def test_partial_sum_identity():
    b = lambda n: 1 - F(1, 2 ** n)
    for d in (1, 2, 3):
        r = from_increasing_sequence(b, d)
        a = to_increasing_sequence(r)
        for N in range(1, 65):
            assert a.eval(N) == (b(N) - b(1)) / d


def test_domination_trivial_cases():
    m = stream_from_pv(CPLX)
    assert corroborate_domination(m, zero_stream(), 1, 8).all_found
    rep = corroborate_domination(m, m, 1, 8)
    assert rep.all_found and all(v == n for (n, s), v in rep.found.items())


def test_domination_by_mixture():
    plant = ("complexity:complexity")
    m = universal_mixture(((2, plant),))
    r = stream_from_complexity(CPLX)
    # the plant enters through shift-mix (weight 1/2) at index 2 (weight 1/4)
    rep = corroborate_domination(m, r, F(1, 8), 12)
    assert rep.all_found


def test_csv_export():
    text = to_csv(stream_from_pv(KRAFT), 3)
    lines = text.strip().splitlines()
    assert lines[0] == "n,s,bits,num,den"
    assert "3,2,0,3,8" in lines
