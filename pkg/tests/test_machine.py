from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from opait.machine import (
    HALT_EMPTY,
    LOOP_FOREVER,
    Halted,
    OutOfFuel,
    Rejected,
    TableMachine,
    assemble,
    fixture_machine,
    load_machine,
    run_vm,
    universal_vm,
)

VM = universal_vm()


def test_halt_empty_program():
    assert run_vm(HALT_EMPTY, 5) == Halted("", 3, 1)


def test_prefixes_never_halt():
    prog = assemble(["EMIT1", "EMIT0", "ECHO", "BIT 1", "HALT"])
    assert run_vm(prog, 100).output == "101"
    for k in range(len(prog)):
        assert not isinstance(run_vm(prog[:k], 100), Halted)


def test_extra_bits_rejected():
    assert isinstance(run_vm(HALT_EMPTY + "0", 10), Rejected)


def test_loop_runs_out_of_fuel():
    assert isinstance(run_vm(LOOP_FOREVER, 10 ** 6), OutOfFuel)


def test_invalid_opcode_rejected():
    assert isinstance(run_vm("11", 10), Rejected)
    assert isinstance(run_vm("101", 10), Rejected)


def test_registers_and_jumps():
    # print "1" r0 times: loop { JZ r0 -> halt; EMIT1; DEC r0; JNZ r0 back }
    prog = assemble(["JZ 0 4", "EMIT1", "DEC 0", "JNZ 0 2", "HALT"])
    assert run_vm(prog, 100, (3,)).output == "111"
    assert run_vm(prog, 100, (0,)).output == ""


@settings(max_examples=40)
@given(st.text("01", max_size=12), st.integers(1, 40), st.integers(0, 40))
def test_fuel_monotone(bits, fuel, extra):
    out = run_vm(bits, fuel)
    if isinstance(out, Halted):
        assert run_vm(bits, fuel + extra) == out


def test_enumeration_prefix_free_and_monotone():
    prev = set()
    for n in range(1, 13):
        st_ = VM.enumerate_halting(n)
        progs = st_.programs()
        assert prev <= progs
        assert not any(a != b and b.startswith(a) for a in progs for b in progs)
        assert st_.kraft_sum == sum(F(1, 2 ** len(p)) for p in progs) <= 1
        prev = progs


def test_stage_one_examines_one_bit_programs():
    assert all(len(d.program) <= 1 for d in VM.enumerate_halting(1).discovered)


def test_kraft_fixture():
    m = fixture_machine("kraft")
    assert m.omega_lower(3) == F(7, 8)
    assert m.omega_lower(1) == F(1, 2)
    assert m.pv_lower(3, "0") == F(3, 8)
    assert m.pv_lower(3, "1") == 0


def test_pv_sums_to_omega():
    for m in (VM, fixture_machine("complexity")):
        for n in range(1, 15):
            assert sum(m.pv_table(n).values(), F(0)) == m.omega_lower(n)


def test_complexity_upper():
    m = fixture_machine("complexity")
    assert m.complexity_upper(6, "00") is None
    assert m.complexity_upper(7, "00") == 3
    assert m.complexity_upper(20, "") == 1


def test_complexity_nonincreasing_on_vm():
    for s in range(1, 20):
        vals = [VM.complexity_upper(n, s) for n in range(1, 16)]
        present = [v for v in vals if v is not None]
        assert present == sorted(present, reverse=True)
        if present:
            assert vals.index(present[0]) + len(present) == len(vals)


def test_min_program_mass_counted():
    m = fixture_machine("complexity")
    for s, k in m.complexity_table(20).items():
        assert F(1, 2 ** k) <= m.pv_lower(20, s)


def test_table_must_be_prefix_free():
    with pytest.raises(ValueError):
        TableMachine({"0": ("", 1), "01": ("", 1)})


def test_load_machine_spec(tmp_path):
    p = tmp_path / "mine.txt"
    p.write_text("1 0 1\n")
    assert load_machine(str(p)).omega_lower(1) == F(1, 2)
    assert load_machine("kraft") is fixture_machine("kraft")
    assert load_machine("vm") is VM
