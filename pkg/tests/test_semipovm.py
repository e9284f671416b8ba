import math
from collections import Counter
from fractions import Fraction as F

import pytest

from opait.linalg import BlockScalarOperator, RationalHermitian, StateVector, combine, quad_form
from opait.machine import fixture_machine
from opait.semimeasure import constant_stream, stream_from_complexity, stream_from_pv, zero_stream
from opait.semipovm import (
    W,
    MeasurementDistribution,
    NormMismatch,
    ScheduleViolation,
    SemiPovmStream,
    from_hilbert_schmidt,
    identity_block,
    measurement_distribution,
    projective_stream,
    raw_draws,
    renormalize_schedule,
    sample_batch,
    sample_outcome,
    scalar_embed,
    shift_mix,
    two_pow,
    validate_semipovm,
    zero_povm_stream,
)

CPLX = fixture_machine("complexity")


def kinds(rep):
    return [(v.kind, v.witness) for v in rep.violations]


def mutant(base, at, value):
    """``base`` with the single value at (n, s) replaced."""
    return SemiPovmStream(lambda n, s: value if (n, s) == at else base.eval(n, s), base.gbound,
                          descriptor=f"mutant:{base.descriptor}", guarded=base.guarded,
                          space_dim=base.space_dim)


# -- validator ------------------------------------------------------------------------

def test_projective_valid():
    assert validate_semipovm(projective_stream(), 16).ok


def test_embedded_fixture_valid():
    assert validate_semipovm(scalar_embed(stream_from_pv(CPLX)), 12).ok
    assert validate_semipovm(scalar_embed(stream_from_complexity(CPLX)), 12).ok


def test_schedule_mutant_witness():
    bad = mutant(projective_stream(), (4, 2), BlockScalarOperator.zero())
    assert kinds(validate_semipovm(bad, 8)) == [("schedule", (3, 2))]


def test_mass_mutant_witness():
    vals = {1: F(1, 2), 2: F(3, 8), 3: F(1, 4)}
    bad = scalar_embed(constant_stream(lambda s: vals.get(s, F(0)), "heavy"))
    rep = validate_semipovm(bad, 6)
    assert kinds(rep) == [("mass", (n,)) for n in range(3, 7)]


def test_positivity_mutant_witness():
    base = projective_stream()
    bad = mutant(base, (2, 5), combine([(-1, base.eval(2, 5))]))
    rep = validate_semipovm(bad, 6)
    assert ("positivity", (2, 5)) in kinds(rep)
    assert {k for k, _ in kinds(rep)} <= {"positivity", "schedule"}


def test_block_size_mutant():
    base = projective_stream()
    bad = mutant(base, (3, 1), identity_block(50, F(1, 2)))
    assert ("block-size", (3, 1)) in kinds(validate_semipovm(bad, 4))


def test_monotone_mutant_on_guarded():
    base = scalar_embed(constant_stream(lambda s: two_pow(-s - 1)))
    bad = mutant(base, (3, 1), identity_block(3, F(1, 8)))
    # lowering the stage-3 value breaks the step from stage 2
    assert kinds(validate_semipovm(bad, 5)) == [("monotone", (2, 1))]


# -- schedule renormalization -----------------------------------------------------------

def _scalar_stream(vals, descriptor):
    return SemiPovmStream(lambda n, s: identity_block(1, vals(n, s)), lambda n, s: 1,
                          descriptor=descriptor)


def test_renormalize_constant_stream():
    a = BlockScalarOperator(RationalHermitian.from_rows([[F(1, 2), F(1, 4)], [F(1, 4), F(1, 3)]]))
    f = SemiPovmStream(lambda n, s: a, lambda n, s: 2, descriptor="const")
    out = renormalize_schedule(f, lambda n, s: F(1, 3 ** n))
    assert all(out.eval(n, s) == a for n in range(1, 12) for s in range(1, 4))


def test_renormalize_harmonic_schedule():
    f = _scalar_stream(lambda n, s: 1 - F(1, n), "harmonic")
    out = renormalize_schedule(f, lambda n, s: F(1, n))
    assert validate_semipovm(out, 12).ok


def test_renormalize_standard_schedule_is_a_shift():
    # with h = 2^-n the interpolation lands on the next input stage
    f = _scalar_stream(lambda n, s: F(1, 2) - two_pow(-n - 1) + F(s, 100), "probe")
    out = renormalize_schedule(f, lambda n, s: two_pow(-n))
    assert all(out.eval(k, s) == f.eval(k + 1, s) for k in range(1, 12) for s in range(1, 4))
    assert validate_semipovm(out, 10).ok


def test_renormalize_rejects_bad_input():
    f = _scalar_stream(lambda n, s: F(1, n), "decreasing")
    out = renormalize_schedule(f, lambda n, s: two_pow(-n))
    with pytest.raises(ScheduleViolation):
        out.eval(3, 1)


# -- constructions ----------------------------------------------------------------------

def test_scalar_embed_examples():
    z = scalar_embed(zero_stream())
    assert all(z.eval(n, s) == BlockScalarOperator.zero() for n in range(1, 5) for s in range(1, 5))
    geo = scalar_embed(constant_stream(lambda s: two_pow(-s)))
    assert geo.eval(3, 2) == identity_block(3, F(1, 4))
    assert validate_semipovm(geo, 10).ok


def test_projective_values():
    p = projective_stream()
    for n in range(1, 8):
        for s in range(1, 8):
            a = p.eval(n, s)
            assert a.entry(s - 1, s - 1).re == 1 + two_pow(-n - 2)
            assert p.gbound(n, s) == s
            assert quad_form(a, StateVector.basis(s)) >= 1


def test_hilbert_schmidt_zero_family():
    z = from_hilbert_schmidt(lambda s: {}, lambda s: F(0))
    assert z.eval(3, 2) == identity_block(1, two_pow(-5))


def test_hilbert_schmidt_norm_mismatch():
    bad = from_hilbert_schmidt(lambda s: {(1, 1): F(1, 2)}, lambda s: F(1))
    with pytest.raises(NormMismatch):
        bad.eval(1, 1)


def test_hilbert_schmidt_truncation():
    # legs of the triple (128, 4095, 4097): norm 1/2, the small entry has
    # squared mass ~2^-12, dropped while 2^(-2n-5) allows it
    big, small = F(4095, 8194), F(128, 8194)
    fam = from_hilbert_schmidt(lambda s: {(s, s): big, (s + 6, s + 6): small},
                               lambda s: F(1, 2))
    assert [fam.gbound(n, 2) for n in range(1, 6)] == [2, 2, 2, 8, 8]
    assert fam.eval(2, 2).entry(1, 1).re == big + two_pow(-4)
    assert validate_semipovm(fam, 12).ok


def test_shift_mix_of_zero():
    z = shift_mix(zero_povm_stream())
    for n in range(1, 6):
        for s in range(1, 6):
            assert z.eval(n, s) == identity_block(n + s, two_pow(-s - 1) * (1 - two_pow(-n)))
    assert validate_semipovm(z, 10).ok


def test_shift_mix_projective_limit():
    sm = shift_mix(projective_stream())
    assert validate_semipovm(sm, 12).ok
    for s in range(1, 5):
        vals = [sm.eval(n, s).entry(s - 1, s - 1).re for n in range(1, 20)]
        target = F(1, 2) + two_pow(-s - 1)
        assert vals == sorted(vals) and abs(vals[-1] - target) < two_pow(-18)


# -- measurement ---------------------------------------------------------------------------

def test_projective_measurement():
    n = 10
    dist = measurement_distribution(projective_stream(), n, StateVector.basis(2), window=2)
    assert dist.probs[1] >= 1 - two_pow(-n)
    assert dist.probs[0] == 0
    assert sum(dist.probs) + dist.residual == 1


def test_state_outside_window():
    dist = measurement_distribution(projective_stream(), 6, StateVector.basis(9), window=3)
    assert dist.probs == (0, 0, 0) and dist.residual == 1


def test_completion_identity_guarded():
    x = StateVector((F(3, 5), F(4, 5)))
    dist = measurement_distribution(shift_mix(projective_stream()), 8, x)
    assert sum(dist.probs) + dist.residual == 1 and dist.residual >= 0


def test_json_layout():
    dist = measurement_distribution(projective_stream(), 3, StateVector.basis(1), 2)
    obj = dist.to_json()
    assert set(obj) == {"stage", "state", "outcomes", "residual"}
    assert set(obj["outcomes"][0]) >= {"s", "p_num", "p_den"}


def _dist(probs):
    probs = tuple(F(p) for p in probs)
    return MeasurementDistribution(1, StateVector.basis(1), probs, 1 - sum(probs))


def test_sampling_degenerate():
    assert set(sample_batch(_dist([0, 1]), 5, 200)) == {2}
    assert set(sample_batch(_dist([0, 0]), 5, 200)) == {W}


def test_sampling_deterministic_and_indexed():
    d = _dist([F(1, 3), F(1, 5)])
    batch = sample_batch(d, 42, 50)
    assert batch == sample_batch(d, 42, 50)
    assert [sample_outcome(d, 42, i) for i in range(50)] == batch
    assert sample_batch(d, 42, 20, start=30) == batch[30:]
    assert list(raw_draws(42, 5, 3)) == list(raw_draws(42, 8)[3:])


def test_sampling_frequencies():
    d = _dist([F(1, 3), F(1, 5), F(1, 7)])
    N = 100_000
    c = Counter(sample_batch(d, 2024, N))
    for k, p in [(1, F(1, 3)), (2, F(1, 5)), (3, F(1, 7)), (W, d.residual)]:
        p = float(p)
        assert abs(c[k] - N * p) <= 3 * math.sqrt(N * p * (1 - p))
