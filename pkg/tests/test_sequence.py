import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfqcontrol.errors import EmptySequence, PeriodTooShort, SequenceFormatError
from sfqcontrol.model import ModelParams, free_evolution
from sfqcontrol.propagator import expm_hermitian
from sfqcontrol.sequence import (
    FidelityEvaluator,
    PulseSequence,
    evolve,
    evolve_naive,
    fidelity,
    initial_sequence,
    pauli_y,
    populations,
    precession_spacing,
)

from conftest import stitched_propagator

# Gate error of the evenly spaced 100-pulse, 20 ns train; frozen from direct
# simulation with the default database (4000 substeps, tau = t_c/3).
SEED_ERROR = 0.01131654603407839


def bits_strategy(n_min=1, n_max=120):
    return st.lists(st.integers(0, 1), min_size=n_min, max_size=n_max)


def test_initial_sequence_defaults(params, seed_seq):
    assert precession_spacing(params) == 20
    assert seed_seq.n_pixels == 2000 and seed_seq.n_pulses == 100
    assert seed_seq.gate_time == pytest.approx(20e-9, rel=1e-15)
    assert np.array_equal(seed_seq.pulse_indices, np.arange(0, 2000, 20))


def test_initial_sequence_single_pulse(params):
    seq = initial_sequence(params, 1)
    assert seq.to_string() == "1" + "0" * 19


def test_period_too_short():
    with pytest.raises(PeriodTooShort):
        initial_sequence(ModelParams(omega=2 * math.pi * 200e9), 10)


def test_all_zero_sequence_is_drift(params, db):
    seq = PulseSequence(np.zeros(137), params.pixel)
    assert np.max(np.abs(evolve(seq, db) - free_evolution(params, 137 * params.pixel))) < 1e-12


def test_single_pulse_is_u1(params, db):
    assert np.array_equal(evolve(PulseSequence([1], params.pixel), db), db.u1)


def test_empty_sequence(params, db):
    with pytest.raises(EmptySequence):
        evolve(PulseSequence([], params.pixel), db)


def test_fast_evolution_matches_dense_product(db, seed_seq):
    assert np.max(np.abs(evolve(seed_seq, db) - evolve_naive(seed_seq, db))) < 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_evolve_matches_stitched_integration(params, db, seed):
    bits = np.random.default_rng(seed).integers(0, 2, 50)
    u = evolve(PulseSequence(bits, params.pixel), db)
    assert np.max(np.abs(u - stitched_propagator(params, bits))) < 1e-8


@settings(max_examples=40, deadline=None)
@given(bits_strategy(), bits_strategy())
def test_evolution_composes(db, a, b):
    sa, sb = PulseSequence(a, db.params.pixel), PulseSequence(b, db.params.pixel)
    joined = evolve(sa.concat(sb), db)
    assert np.max(np.abs(joined - evolve(sb, db) @ evolve(sa, db))) < 1e-12


def test_fidelity_of_target_is_one():
    for phi in (0.0, 1.3, -2.0):
        t = pauli_y(3, phi)
        assert fidelity(t.matrix, pauli_y(3)) == pytest.approx(1.0, abs=1e-15)


def test_fidelity_of_identity_is_zero():
    assert fidelity(np.eye(3), pauli_y(3)) == 0.0


def test_fidelity_global_phase():
    t = pauli_y(3)
    assert fidelity(np.exp(0.7j) * t.matrix, t) == pytest.approx(1.0, abs=1e-15)


def unitaries(d=3):
    def make(seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return expm_hermitian((a + a.conj().T) / 2, 1.0)
    return st.integers(0, 2**32 - 1).map(make)


@settings(max_examples=100, deadline=None)
@given(unitaries(), st.floats(-10, 10), st.floats(-math.pi, math.pi))
def test_fidelity_bounds_and_invariances(u, phi, alpha):
    f = fidelity(u, pauli_y(3))
    assert 0.0 <= f <= 1.0 + 1e-15
    assert fidelity(u, pauli_y(3, phi)) == f
    assert fidelity(np.exp(1j * alpha) * u, pauli_y(3)) == pytest.approx(f, abs=1e-14)


def test_fidelity_ignores_leakage_block():
    u = np.eye(3, dtype=complex)
    v = u.copy()
    v[2, 2] = np.exp(0.4j)
    assert fidelity(u, pauli_y(3)) == fidelity(v, pauli_y(3))


def test_target_qubit_block():
    t = pauli_y(4, 0.3)
    assert np.array_equal(t.qubit_block, [[0, -1], [1, 0]])
    assert t.matrix[3, 3] == pytest.approx(np.exp(0.3j))


def test_seed_sequence_error(db, seed_seq):
    err = 1 - fidelity(evolve(seed_seq, db), pauli_y(3))
    assert 1e-3 <= err <= 1e-1
    assert abs(err - SEED_ERROR) < 1e-9


def test_batch_evaluator_matches_evolve(db):
    rng = np.random.default_rng(11)
    pop = (rng.random((9, 400)) < 0.2).astype(np.uint8)
    ev = FidelityEvaluator(db, 400)
    expected = [fidelity(evolve(PulseSequence(b, db.params.pixel), db), pauli_y(3)) for b in pop]
    assert np.allclose(ev.batch(pop), expected, rtol=0, atol=1e-13)
    threaded = FidelityEvaluator(db, 400, threads=3)
    assert np.array_equal(threaded.batch(pop), ev.batch(pop))


def test_populations_drift_only(params, db):
    pops = populations(PulseSequence(np.zeros(40), params.pixel), db, 0)
    assert pops.shape == (41, 3)
    assert np.array_equal(pops, np.tile([1.0, 0.0, 0.0], (41, 1)))


@settings(max_examples=25, deadline=None)
@given(bits_strategy(1, 300), st.integers(0, 2))
def test_population_rows_normalized(db, bits, level):
    pops = populations(PulseSequence(bits, db.params.pixel), db, level)
    assert np.all(pops >= 0)
    assert np.max(np.abs(pops.sum(axis=1) - 1)) < 1e-10


def test_optimized_sequence_suppresses_leakage(db, optimized):
    best, _ = optimized
    for level in (0, 1):
        assert populations(best, db, level)[-1, 2] < 1e-4


def test_sequence_text_roundtrip(tmp_path, seed_seq):
    text = seed_seq.dumps()
    assert text.splitlines()[0] == "# pixel_ps=10 gate_ns=20"
    assert PulseSequence.loads(text) == seed_seq
    seed_seq.save(tmp_path / "s.seq")
    assert PulseSequence.load(tmp_path / "s.seq") == seed_seq


@pytest.mark.parametrize("text", [
    "# pixel_ps=10\n0102\n",
    "0101\n",
    "# pixel_ps=10\n0101\n0101\n",
])
def test_sequence_parse_errors(text):
    with pytest.raises(SequenceFormatError):
        PulseSequence.loads(text)
