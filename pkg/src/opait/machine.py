"""Self-delimiting machines: a small register VM and table-driven fixtures.

Programs are bit strings read on demand.  A run halts successfully only if the
HALT instruction is reached after consuming every bit of the program, so the
halting domain is prefix-free by construction.

Instruction encoding (prefix-free opcodes, ``rr`` a 2-bit register number,
``<k>`` a unary count: k-1 ones then a zero):

    000            HALT
    0010 / 0011    EMIT0 / EMIT1      append a bit to the output
    0100           ECHO               read one program bit, append it
    0101 rr        INC r
    0110 rr        DEC r              saturates at 0
    0111 rr <k>    JNZ r, -k          jump k instructions back if r != 0
    1000 rr <k>    JZ r, +k           jump k instructions ahead if r == 0
    1001 rr        READ r             read one program bit; if 1, INC r
    101, 11        invalid

Each executed instruction costs one unit of fuel.  Instructions and data bits
share one cursor; instructions are decoded lazily, including when a forward
jump needs instructions that have not been decoded yet.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, NamedTuple, Optional

from .strings import StrLike, as_index, from_index

NREG = 4


# -- run outcomes -------------------------------------------------------------

@dataclass(frozen=True)
class Halted:
    output: str
    bits_consumed: int
    steps: int = 0


@dataclass(frozen=True)
class OutOfFuel:
    pass


@dataclass(frozen=True)
class Rejected:
    reason: str = ""


RunOutcome = Halted | OutOfFuel | Rejected


# -- VM -----------------------------------------------------------------------

class _Need(Exception):
    """The decoder asked for a bit past the end of the known prefix."""


class _Reject(Exception):
    pass


class VMState(NamedTuple):
    pos: int
    prog: tuple
    pc: int
    regs: tuple
    out: str
    steps: int


INITIAL = VMState(0, (), 0, (0,) * NREG, "", 0)


def _decode(bits: str, pos: int) -> tuple[tuple, int]:
    """Decode one instruction at ``pos``; return (instruction, new pos)."""

    def bit(i):
        if i >= len(bits):
            raise _Need
        return bits[i]

    def reg(i):
        return int(bit(i) + bit(i + 1), 2), i + 2

    def unary(i):
        k = 1
        while bit(i) == "1":
            k += 1
            i += 1
        return k, i + 1

    b0, b1, b2 = bit(pos), bit(pos + 1), bit(pos + 2)
    head = b0 + b1 + b2
    if head == "000":
        return ("HALT",), pos + 3
    if b0 == "1" and b1 == "1":
        raise _Reject("invalid opcode 11")
    if head == "101":
        raise _Reject("invalid opcode 101")
    op = head + bit(pos + 3)
    p = pos + 4
    if op == "0010":
        return ("EMIT", "0"), p
    if op == "0011":
        return ("EMIT", "1"), p
    if op == "0100":
        return ("ECHO",), p
    r, p = reg(p)
    if op == "0101":
        return ("INC", r), p
    if op == "0110":
        return ("DEC", r), p
    if op == "1001":
        return ("READ", r), p
    k, p = unary(p)
    if op == "0111":
        return ("JNZ", r, k), p
    return ("JZ", r, k), p  # op == "1000"


def _step(bits: str, st: VMState) -> tuple[VMState, Optional[str]]:
    """Execute one instruction.  Returns (new state, "halt" or None)."""
    pos, prog, pc, out = st.pos, st.prog, st.pc, st.out
    while len(prog) <= pc:
        ins, pos = _decode(bits, pos)
        prog = prog + (ins,)
    ins = prog[pc]
    regs = st.regs
    op = ins[0]
    steps = st.steps + 1
    if op == "HALT":
        return VMState(pos, prog, pc, regs, out, steps), "halt"
    if op == "EMIT":
        out += ins[1]
        pc += 1
    elif op == "ECHO" or op == "READ":
        if pos >= len(bits):
            raise _Need
        b = bits[pos]
        pos += 1
        if op == "ECHO":
            out += b
        elif b == "1":
            regs = regs[:ins[1]] + (regs[ins[1]] + 1,) + regs[ins[1] + 1:]
        pc += 1
    elif op == "INC":
        regs = regs[:ins[1]] + (regs[ins[1]] + 1,) + regs[ins[1] + 1:]
        pc += 1
    elif op == "DEC":
        r = ins[1]
        regs = regs[:r] + (max(regs[r] - 1, 0),) + regs[r + 1:]
        pc += 1
    elif op == "JNZ":
        if regs[ins[1]] != 0:
            if pc - ins[2] < 0:
                raise _Reject("backward jump before program start")
            pc -= ins[2]
        else:
            pc += 1
    else:  # JZ
        pc = pc + ins[2] if regs[ins[1]] == 0 else pc + 1
    return VMState(pos, prog, pc, regs, out, steps), None


def advance(bits: str, st: VMState, fuel: int):
    """Run from ``st`` on the known prefix ``bits``.

    Returns ("halt", state), ("fuel", state), ("reject", reason) or
    ("need", state) where ``state`` is the last instruction boundary.
    """
    while True:
        if st.steps >= fuel:
            return "fuel", st
        try:
            nxt, flag = _step(bits, st)
        except _Need:
            return "need", st
        except _Reject as e:
            return "reject", str(e)
        st = nxt
        if flag == "halt":
            return "halt", st


def run_vm(bits: str, fuel: int, regs: Iterable[int] = ()) -> RunOutcome:
    """Run the VM on the complete program ``bits`` with at most ``fuel`` steps."""
    if fuel < 1:
        raise ValueError("fuel must be >= 1")
    init = list(regs) + [0] * NREG
    st = INITIAL._replace(regs=tuple(init[:NREG]))
    kind, st = advance(bits, st, fuel)
    if kind == "halt":
        if st.pos != len(bits):
            return Rejected("halted with unread program bits")
        return Halted(st.out, st.pos, st.steps)
    if kind == "fuel":
        return OutOfFuel()
    if kind == "need":
        return Rejected("read past the end of the program")
    return Rejected(st)


# -- assembler (tests, scripts, docs) -----------------------------------------

def _unary(k: int) -> str:
    if k < 1:
        raise ValueError("jump distance must be >= 1")
    return "1" * (k - 1) + "0"


def assemble(lines: Iterable[str]) -> str:
    """Tiny assembler: one instruction per line, e.g. ``INC 0`` or ``JNZ 1 2``.

    ``BIT b`` places a raw data bit (for ECHO/READ) at that point.
    """
    out = []
    for line in lines:
        parts = line.split("#")[0].split()
        if not parts:
            continue
        op, args = parts[0].upper(), [int(a) for a in parts[1:]]
        reg = lambda: format(args[0], "02b")
        if op == "HALT":
            out.append("000")
        elif op in ("EMIT0", "EMIT1"):
            out.append("001" + op[-1])
        elif op == "ECHO":
            out.append("0100")
        elif op == "INC":
            out.append("0101" + reg())
        elif op == "DEC":
            out.append("0110" + reg())
        elif op == "JNZ":
            out.append("0111" + reg() + _unary(args[1]))
        elif op == "JZ":
            out.append("1000" + reg() + _unary(args[1]))
        elif op == "READ":
            out.append("1001" + reg())
        elif op == "BIT":
            out.append(str(args[0]))
        else:
            raise ValueError(f"unknown mnemonic {op}")
    return "".join(out)


HALT_EMPTY = "000"
LOOP_FOREVER = assemble(["INC 0", "JNZ 0 1"])


# -- machines and enumeration ---------------------------------------------------

@dataclass(frozen=True)
class Discovery:
    program: str
    output: str
    steps: int


@dataclass(frozen=True)
class EnumerationStage:
    stage: int
    discovered: tuple  # of Discovery, canonical order (length, then bits)
    kraft_sum: Fraction

    def programs(self) -> set[str]:
        return {d.program for d in self.discovered}


def _canonical(d: Discovery):
    return (len(d.program), d.program)


class PrefixMachine:
    """Shared stage bookkeeping; subclasses provide run() and _halting(N)."""

    name = "machine"

    def run(self, program: str, fuel: int) -> RunOutcome:
        raise NotImplementedError

    def _halting(self, n: int) -> list[Discovery]:
        """All programs of length <= n halting within n steps."""
        raise NotImplementedError

    def __init__(self):
        self._cache_n = 0
        self._cache: list[Discovery] = []
        self._stages: dict[int, EnumerationStage] = {}
        self._tables: dict[tuple, dict] = {}

    def _ensure(self, n: int):
        if n > self._cache_n:
            self._cache = sorted(self._halting(n), key=_canonical)
            self._cache_n = n

    def enumerate_halting(self, stage: int) -> EnumerationStage:
        if stage < 1:
            raise ValueError("stage must be >= 1")
        got = self._stages.get(stage)
        if got is None:
            self._ensure(stage)
            found = tuple(d for d in self._cache
                          if len(d.program) <= stage and d.steps <= stage)
            kraft = sum((Fraction(1, 2 ** len(d.program)) for d in found), Fraction(0))
            got = EnumerationStage(stage, found, kraft)
            self._stages[stage] = got
        return got

    def omega_lower(self, stage: int) -> Fraction:
        return self.enumerate_halting(stage).kraft_sum

    def complexity_upper(self, stage: int, s: StrLike) -> Optional[int]:
        target = from_index(as_index(s))
        lens = [len(d.program) for d in self.enumerate_halting(stage).discovered
                if d.output == target]
        return min(lens) if lens else None

    def pv_lower(self, stage: int, s: StrLike) -> Fraction:
        target = from_index(as_index(s))
        return sum((Fraction(1, 2 ** len(d.program))
                    for d in self.enumerate_halting(stage).discovered if d.output == target),
                   Fraction(0))

    def pv_table(self, stage: int) -> dict[int, Fraction]:
        """pv_lower for every output found so far, keyed by string index."""
        key = ("pv", stage)
        if key not in self._tables:
            out: dict[int, Fraction] = {}
            for d in self.enumerate_halting(stage).discovered:
                k = as_index(d.output)
                out[k] = out.get(k, Fraction(0)) + Fraction(1, 2 ** len(d.program))
            self._tables[key] = out
        return self._tables[key]

    def complexity_table(self, stage: int) -> dict[int, int]:
        key = ("k", stage)
        if key not in self._tables:
            out: dict[int, int] = {}
            for d in self.enumerate_halting(stage).discovered:
                k = as_index(d.output)
                out[k] = min(out.get(k, len(d.program)), len(d.program))
            self._tables[key] = out
        return self._tables[key]


class RegisterVM(PrefixMachine):
    """The register VM described in the module docstring."""

    name = "vm"

    def run(self, program: str, fuel: int) -> RunOutcome:
        return run_vm(program, fuel)

    def _halting(self, n: int) -> list[Discovery]:
        found = []
        # depth-first over bit requests; each frame is (known prefix, resumable state)
        stack = [("", INITIAL)]
        while stack:
            bits, st = stack.pop()
            kind, st2 = advance(bits, st, n)
            if kind == "halt":
                if st2.pos == len(bits):
                    found.append(Discovery(bits, st2.out, st2.steps))
            elif kind == "need" and len(bits) < n:
                stack.append((bits + "1", st2))
                stack.append((bits + "0", st2))
        return found


class TableMachine(PrefixMachine):
    """A finite prefix-free machine given as a table program -> (output, steps)."""

    name = "table"

    def __init__(self, table: dict[str, tuple[str, int]], name: str = "table"):
        super().__init__()
        progs = sorted(table, key=lambda p: (len(p), p))
        for p in progs:
            if any(c not in "01" for c in p):
                raise ValueError(f"not a bit string: {p!r}")
        for a in progs:
            for b in progs:
                if a != b and b.startswith(a):
                    raise ValueError(f"table is not prefix-free: {a} / {b}")
        self.table = dict(table)
        self.name = name

    @classmethod
    def from_text(cls, text: str, name: str = "table") -> "TableMachine":
        """Lines ``<program bits> <output bits | - | λ> [steps]``; ``#`` comments."""
        table = {}
        for raw in text.splitlines():
            line = raw.split("#")[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"bad fixture line: {raw!r}")
            out = "" if parts[1] in ("-", "λ") else parts[1]
            steps = int(parts[2]) if len(parts) == 3 else len(parts[0])
            table[parts[0]] = (out, steps)
        return cls(table, name)

    @classmethod
    def from_file(cls, path) -> "TableMachine":
        path = Path(path)
        return cls.from_text(path.read_text(), path.stem)

    def run(self, program: str, fuel: int) -> RunOutcome:
        if fuel < 1:
            raise ValueError("fuel must be >= 1")
        hit = self.table.get(program)
        if hit is not None:
            out, steps = hit
            return Halted(out, len(program), steps) if steps <= fuel else OutOfFuel()
        for p, (_, steps) in self.table.items():
            if program.startswith(p):
                return Rejected("halted with unread program bits")
            if p.startswith(program) and steps <= fuel:
                return Rejected("read past the end of the program")
        return OutOfFuel()

    def _halting(self, n: int) -> list[Discovery]:
        return [Discovery(p, out, steps) for p, (out, steps) in self.table.items()
                if len(p) <= n and steps <= n]


FIXTURE_DIR = Path(__file__).with_name("fixtures")


@lru_cache(maxsize=None)
def fixture_machine(name: str) -> TableMachine:
    """Bundled table machines: ``kraft`` (dom = {0, 10, 110}), ``complexity``."""
    return TableMachine.from_file(FIXTURE_DIR / f"{name}.txt")


@lru_cache(maxsize=None)
def universal_vm() -> RegisterVM:
    return RegisterVM()


def load_machine(spec: str) -> PrefixMachine:
    """``vm``, a bundled fixture name, or a path to a table file."""
    if spec == "vm":
        return universal_vm()
    if (FIXTURE_DIR / f"{spec}.txt").exists():
        return fixture_machine(spec)
    return TableMachine.from_file(spec)
