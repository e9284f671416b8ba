"""Dovetailed universal semi-POVM: guarded emitter runs and their 2^-l mixture.

Each index l names an emitter machine mapping (k, s) to a Hermitian matrix.
Its guarded run processes the anti-diagonals S_j = {(j-s+1, s) : s <= j} in
order and only accepts a step when every output is positive, dominates the
previously accepted value for the same s, and the step's outputs sum to at
most I.  One step is attempted per unit of dovetail time with a fuel budget
that grows with time; a failed check freezes the run for good.

Index 1 is reserved for the planted floor, the shift-mix of the zero stream.
Other indices run the VM program whose bits are the string with that index,
with k and s preloaded into registers 0 and 1, and decode the printed bits as
a matrix (see ``decode_matrix``).  Extra named plants can replace chosen
indices.
"""

from __future__ import annotations

import bisect
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .linalg import BlockScalarOperator, RationalHermitian, combine, is_psd, loewner_leq
from .machine import OutOfFuel, Rejected, _decode, _Need, _Reject, load_machine, run_vm
from .rational import RationalComplex
from .semimeasure import SemiMeasureStream, stream_from_complexity, stream_from_pv
from .semipovm import (
    SemiPovmStream,
    projective_stream,
    scalar_embed,
    scalar_view,
    shift_mix,
    two_pow,
    zero_povm_stream,
)
from .strings import from_index

FORMAT_VERSION = 1
FUEL_PER_TIME = 64
ONE = BlockScalarOperator.identity()


class FormatVersionMismatch(ValueError):
    pass


# -- matrix output convention --------------------------------------------------

def _nat_bits(n: int) -> str:
    # Elias gamma of n + 1
    b = bin(n + 1)[2:]
    return "1" * (len(b) - 1) + "0" + b[1:]


def _rat_bits(q: Fraction) -> str:
    return ("1" if q < 0 else "0") + _nat_bits(abs(q.numerator)) + _nat_bits(q.denominator - 1)


def encode_matrix(a: RationalHermitian) -> str:
    """Bits: dim-1, then the upper triangle row-major (diagonal: one rational,
    off-diagonal: real and imaginary parts).  Rationals are sign, |num|, den-1."""
    out = [_nat_bits(a.dim - 1)]
    for i in range(a.dim):
        for j in range(i, a.dim):
            v = a.entry(i, j)
            out.append(_rat_bits(v.re))
            if i != j:
                out.append(_rat_bits(v.im))
    return "".join(out)


class _Bits:
    def __init__(self, bits: str):
        self.bits, self.pos = bits, 0

    def take(self) -> str:
        if self.pos >= len(self.bits):
            raise ValueError("truncated matrix code")
        b = self.bits[self.pos]
        self.pos += 1
        return b

    def nat(self) -> int:
        L = 0
        while self.take() == "1":
            L += 1
        v = 1
        for _ in range(L):
            v = 2 * v + int(self.take())
        return v - 1

    def rat(self) -> Fraction:
        neg = self.take() == "1"
        num = self.nat()
        den = self.nat() + 1
        return Fraction(-num if neg else num, den)


def decode_matrix(bits: str, max_dim: int = 64) -> Optional[RationalHermitian]:
    """Inverse of encode_matrix; None unless ``bits`` is exactly one code word."""
    rd = _Bits(bits)
    try:
        m = rd.nat() + 1
        if m > max_dim:
            return None
        ents = {}
        for i in range(m):
            for j in range(i, m):
                re = rd.rat()
                im = rd.rat() if i != j else Fraction(0)
                v = RationalComplex(re, im)
                if v:
                    ents[(i, j)] = v
                    ents[(j, i)] = v.conjugate()
    except ValueError:
        return None
    if rd.pos != len(bits):
        return None
    return RationalHermitian(m, ents, check=False)


# -- emitters ------------------------------------------------------------------------

@dataclass(frozen=True)
class EmitResult:
    status: str  # "halted", "fuel", "diverges"
    value: Optional[RationalHermitian] = None
    cost: int = 0


class EmitterMachine:
    """(k, s, fuel) -> EmitResult.  Deterministic."""

    name = "emitter"

    def emit(self, k: int, s: int, fuel: int) -> EmitResult:
        raise NotImplementedError


class NeverHalts(EmitterMachine):
    name = "never-halts"

    def emit(self, k, s, fuel):
        return EmitResult("fuel", cost=fuel)


class VMEmitter(EmitterMachine):
    def __init__(self, bits: str, space_dim: Optional[int]):
        self.bits = bits
        self.space_dim = space_dim
        self.name = f"vm:{bits or 'λ'}"

    def emit(self, k, s, fuel):
        out = run_vm(self.bits, fuel, (k, s))
        if isinstance(out, OutOfFuel):
            return EmitResult("fuel", cost=fuel)
        if isinstance(out, Rejected):
            return EmitResult("diverges")
        mat = decode_matrix(out.output)
        if mat is not None and self.space_dim is not None and mat.dim > self.space_dim:
            mat = None
        return EmitResult("halted", mat, out.steps)


class PlantedEmitter(EmitterMachine):
    """Emits G(k + s - 1, s) for a stream G, so the guarded run at step j
    proposes G(j, s) for every s <= j."""

    def __init__(self, name: str, stream: SemiPovmStream):
        self.name = name
        self.stream = stream

    def emit(self, k, s, fuel):
        a = self.stream.eval(k + s - 1, s)
        return EmitResult("halted", a.trimmed().block if a.tail == 0 else None, 1)


def _semimeasure_plant(r: SemiMeasureStream, space_dim):
    return scalar_view(r) if space_dim == 1 else scalar_embed(r)


def plant_stream(name: str, space_dim: Optional[int]) -> SemiPovmStream:
    """Named plants.  Guarded streams are planted as they are, others through
    shift_mix.

    ``floor``: shift-mix of the zero stream.  ``projective``: shift-mix of the
    projective POVM.  ``pv:<machine>`` / ``complexity:<machine>``: the
    semi-measures of a machine (``vm`` or a fixture), as operators.
    """
    if name == "floor":
        return shift_mix(zero_povm_stream(space_dim))
    if name == "projective":
        if space_dim is not None:
            raise ValueError("the projective plant needs the infinite-dimensional space")
        return shift_mix(projective_stream())
    kind, _, arg = name.partition(":")
    if kind in ("pv", "complexity") and arg:
        machine = load_machine(arg)
        r = stream_from_pv(machine) if kind == "pv" else stream_from_complexity(machine)
        return _semimeasure_plant(r, space_dim)
    raise ValueError(f"unknown plant {name!r}")


@dataclass(frozen=True)
class ConstructorConfig:
    space_dim: Optional[int] = None        # None: l2; 1: scalar semi-measure view
    plants: tuple = ()                     # ((l, name), ...) with l >= 2
    fuel_per_time: int = FUEL_PER_TIME

    def __post_init__(self):
        plants = tuple(sorted((int(l), str(n)) for l, n in self.plants))
        if any(l < 2 for l, _ in plants):
            raise ValueError("index 1 is reserved for the planted floor")
        if len({l for l, _ in plants}) != len(plants):
            raise ValueError("duplicate plant index")
        object.__setattr__(self, "plants", plants)

    def to_json(self) -> dict:
        return {"space_dim": self.space_dim, "plants": [[l, n] for l, n in self.plants],
                "fuel_per_time": self.fuel_per_time}

    @classmethod
    def from_json(cls, obj) -> "ConstructorConfig":
        return cls(obj["space_dim"], tuple((l, n) for l, n in obj["plants"]),
                   obj["fuel_per_time"])


def _first_instruction_ok(bits: str) -> bool:
    # codes whose first instruction is truncated or invalid are never run
    try:
        _decode(bits, 0)
    except (_Need, _Reject):
        return False
    return True


def decode_emitter(l: int, config: ConstructorConfig = ConstructorConfig(),
                   _cache: dict = {}) -> EmitterMachine:
    """The l-th emitter under ``config``; invalid codes never halt."""
    if l < 1:
        raise ValueError("emitter indices start at 1")
    key = (l, config)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    plants = dict(config.plants)
    if l == 1:
        em = PlantedEmitter("floor", plant_stream("floor", config.space_dim))
    elif l in plants:
        stream = plant_stream(plants[l], config.space_dim)
        if not stream.guarded:
            stream = shift_mix(stream)
        em = PlantedEmitter(plants[l], stream)
    else:
        bits = from_index(l)
        em = VMEmitter(bits, config.space_dim) if _first_instruction_ok(bits) else NeverHalts()
    _cache[key] = em
    return em


# -- guarded runs ---------------------------------------------------------------------

@dataclass
class Acceptance:
    time: int
    step: int
    values: tuple  # RationalHermitian for s = 1..step

    def to_json(self) -> dict:
        return {"time": self.time, "step": self.step,
                "values": [v.to_json() for v in self.values]}

    @classmethod
    def from_json(cls, obj) -> "Acceptance":
        return cls(obj["time"], obj["step"],
                   tuple(RationalHermitian.from_json(v) for v in obj["values"]))


@dataclass
class GuardedRun:
    l: int
    step: int = 1             # pending outer step j
    time: int = 0             # last dovetail time processed
    status: str = "running"   # running | frozen
    fuel_spent: int = 0
    frozen_reason: str = ""
    log: list = field(default_factory=list)  # Acceptance, increasing time

    def current(self) -> dict:
        """h(s) after the latest acceptance."""
        if not self.log:
            return {}
        last = self.log[-1]
        return {s: v for s, v in enumerate(last.values, start=1)}

    def value_at(self, n: int, s: int) -> RationalHermitian:
        """h(s) as it stood at dovetail time n (the 1x1 zero matrix if unset)."""
        times = [a.time for a in self.log]
        i = bisect.bisect_right(times, n) - 1
        if i >= 0 and s <= self.log[i].step:
            return self.log[i].values[s - 1]
        return RationalHermitian.zeros(1)

    def to_json(self) -> dict:
        return {"l": self.l, "step": self.step, "time": self.time, "status": self.status,
                "fuel_spent": self.fuel_spent, "frozen_reason": self.frozen_reason,
                "log": [a.to_json() for a in self.log]}

    @classmethod
    def from_json(cls, obj) -> "GuardedRun":
        return cls(obj["l"], obj["step"], obj["time"], obj["status"], obj["fuel_spent"],
                   obj["frozen_reason"], [Acceptance.from_json(a) for a in obj["log"]])


def _op(a: RationalHermitian) -> BlockScalarOperator:
    return BlockScalarOperator(a, Fraction(0))


def check_step(previous: dict, values: list, space_dim: Optional[int]) -> str:
    """'' if the proposed step values pass conditions (i)-(iii), else the reason."""
    for s, v in enumerate(values, start=1):
        if v is None:
            return f"output for s={s} is not a matrix"
        if space_dim is not None and v.dim > space_dim:
            return f"output for s={s} exceeds the space dimension"
        if not is_psd(_op(v)):
            return f"output for s={s} is not positive"
    for s, v in enumerate(values, start=1):
        old = previous.get(s)
        if old is not None and not loewner_leq(_op(old), _op(v)):
            return f"output for s={s} does not dominate the accepted value"
    if not is_psd(combine([(1, ONE)] + [(-1, _op(v)) for v in values])):
        return "outputs sum above I"
    return ""


def advance_run(run: GuardedRun, emitter: EmitterMachine, t: int, config: ConstructorConfig):
    """Process dovetail time t for one run: attempt the pending step once."""
    assert t == run.time + 1
    run.time = t
    if run.status != "running":
        return
    j = run.step
    fuel = config.fuel_per_time * t
    values = []
    waiting = False
    for s in range(1, j + 1):
        res = emitter.emit(j - s + 1, s, fuel)
        run.fuel_spent += res.cost
        if res.status == "diverges":
            run.status, run.frozen_reason = "frozen", f"no output for (k, s) = ({j - s + 1}, {s})"
            return
        if res.status == "fuel":
            waiting = True
            break
        values.append(res.value)
    if waiting:
        return
    reason = check_step(run.current(), values, config.space_dim)
    if reason:
        run.status, run.frozen_reason = "frozen", f"step {j}: {reason}"
        return
    run.log.append(Acceptance(t, j, tuple(values)))
    run.step = j + 1


def replay_log(run: GuardedRun, space_dim: Optional[int] = None) -> list[str]:
    """Recheck every logged acceptance; returns the list of failures (empty if sound)."""
    problems = []
    prev: dict = {}
    for a in run.log:
        reason = check_step(prev, list(a.values), space_dim)
        if reason:
            problems.append(f"l={run.l} time={a.time}: {reason}")
        prev = {s: v for s, v in enumerate(a.values, start=1)}
    return problems


# -- dovetailer -------------------------------------------------------------------------

class Dovetailer:
    """All guarded runs l <= stage, advanced in lock step (ascending l)."""

    def __init__(self, config: ConstructorConfig = ConstructorConfig()):
        self.config = config
        self.stage = 0
        self.runs: dict[int, GuardedRun] = {}

    def emitter(self, l: int) -> EmitterMachine:
        return decode_emitter(l, self.config)

    def _advance_time(self, t: int):
        for l in range(1, t + 1):
            run = self.runs.get(l)
            if run is None:
                run = self.runs[l] = GuardedRun(l)
            while run.time < t:
                advance_run(run, self.emitter(l), run.time + 1, self.config)

    def advance_to(self, n: int):
        while self.stage < n:
            self._advance_time(self.stage + 1)
            self.stage += 1

    def run(self, l: int, upto: Optional[int] = None) -> GuardedRun:
        """Guarded run l, processed at least to time ``upto`` (default: max(l, stage))."""
        need = max(l, upto or 0)
        if need > self.stage:
            self.advance_to(need)
        return self.runs[l]

    def f(self, l: int, n: int, s: int) -> BlockScalarOperator:
        """f(l, n, s): the value of guarded run l at time n."""
        return _op(self.run(l, n).value_at(n, s))

    def g(self, l: int, n: int, s: int) -> int:
        return self.run(l, n).value_at(n, s).dim

    def mixture(self, n: int, s: int) -> BlockScalarOperator:
        """f_M(n, s) = sum_{l <= n} 2^-l f(l, n, s)."""
        self.advance_to(n)
        return combine([(two_pow(-l), self.f(l, n, s)) for l in range(1, n + 1)])

    def mixture_g(self, n: int, s: int) -> int:
        self.advance_to(n)
        return max(self.g(l, n, s) for l in range(1, n + 1))

    # checkpoints
    def to_json(self) -> dict:
        return {"format": "opait-dovetail", "version": FORMAT_VERSION, "stage": self.stage,
                "config": self.config.to_json(),
                "runs": [self.runs[l].to_json() for l in sorted(self.runs)]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj) -> "Dovetailer":
        try:
            if obj.get("format") != "opait-dovetail" or obj.get("version") != FORMAT_VERSION:
                raise FormatVersionMismatch(
                    f"expected opait-dovetail version {FORMAT_VERSION}, "
                    f"got {obj.get('format')!r} version {obj.get('version')!r}")
            d = cls(ConstructorConfig.from_json(obj["config"]))
            d.stage = int(obj["stage"])
            for r in obj["runs"]:
                run = GuardedRun.from_json(r)
                d.runs[run.l] = run
        except FormatVersionMismatch:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise FormatVersionMismatch(f"unreadable checkpoint: {e}") from e
        return d

    @classmethod
    def loads(cls, text: str) -> "Dovetailer":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatVersionMismatch(f"checkpoint is not JSON: {e}") from e
        if not isinstance(obj, dict):
            raise FormatVersionMismatch("checkpoint is not a JSON object")
        return cls.from_json(obj)

    def save(self, path) -> Path:
        path = resolve_checkpoint(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())
        return path

    @classmethod
    def load(cls, path) -> "Dovetailer":
        return cls.loads(resolve_checkpoint(path).read_text())


def resolve_checkpoint(path) -> Path:
    """Relative paths live under $OPAIT_CHECKPOINT_DIR when it is set."""
    path = Path(path)
    root = os.environ.get("OPAIT_CHECKPOINT_DIR")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def checkpoint_roundtrip(state: Dovetailer) -> Dovetailer:
    return Dovetailer.loads(state.dumps())


# -- stream views ---------------------------------------------------------------------------

def guarded_stream(l: int, dovetailer: Dovetailer) -> SemiPovmStream:
    return SemiPovmStream(lambda n, s: dovetailer.f(l, n, s),
                          lambda n, s: dovetailer.g(l, n, s),
                          descriptor=f"guarded:{l}:{dovetailer.emitter(l).name}",
                          guarded=True, space_dim=dovetailer.config.space_dim)


def universal_stream(dovetailer: Dovetailer) -> SemiPovmStream:
    return SemiPovmStream(dovetailer.mixture, dovetailer.mixture_g, descriptor="universal",
                          guarded=True, space_dim=dovetailer.config.space_dim)


def universal_mixture(plants: tuple = ()) -> SemiMeasureStream:
    """The scalar semi-measure mixture: the one-dimensional dovetailer."""
    d = Dovetailer(ConstructorConfig(space_dim=1, plants=plants))
    return SemiMeasureStream(lambda n, s: d.mixture(n, s).entry(0, 0).re, "universal-mixture")


def scalar_floor(s: int) -> Fraction:
    """c_s = 2^(-s-2): half the floor plant's limit 2^(-s-1) I, weighted 2^-1."""
    return two_pow(-s - 2)


def omega_hat_lower(dovetailer: Dovetailer, n: int, m: int) -> BlockScalarOperator:
    """sum_{s <= m} f_M(n, s), a Loewner lower bound for the operator omega."""
    return combine([(1, dovetailer.mixture(n, s)) for s in range(1, m + 1)])


@dataclass
class DominationCheck:
    checked: int = 0
    failures: list = field(default_factory=list)


def mixture_domination(dovetailer: Dovetailer, N: int, S: int) -> DominationCheck:
    """2^-l f(l, n, s) <= f_M(n, s) for all l <= n <= N, s <= S."""
    out = DominationCheck()
    for n in range(1, N + 1):
        for s in range(1, S + 1):
            fm = dovetailer.mixture(n, s)
            for l in range(1, n + 1):
                out.checked += 1
                if not loewner_leq(combine([(two_pow(-l), dovetailer.f(l, n, s))]), fm):
                    out.failures.append((l, n, s))
    return out
