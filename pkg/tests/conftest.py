
import numpy as np
import pytest

from sfqcontrol.ga import GAConfig
from sfqcontrol.experiments import optimize_gate_time
from sfqcontrol.model import ModelParams, build_control, build_database, build_drift, pulse_prefactor
from sfqcontrol.propagator import expm_hermitian_batch
from sfqcontrol.sequence import initial_sequence


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def db(params):
    return build_database(params)


@pytest.fixture(scope="session")
def seed_seq(params):
    return initial_sequence(params, 100)


@pytest.fixture(scope="session")
def optimized(db):
    """GA run at 20 ns with Table I settings and seed 1, shared by the suite."""
    best, run = optimize_gate_time(20e-9, db, GAConfig(seed=1))
    assert run.terminated_by == "target_reached"
    return best, run


def stitched_propagator(params, bits, substeps_per_pixel=4000, delays=None):
    """Independent oracle: midpoint integration of the full stitched H(t).

    Pulse ``i`` is centred on ``2 t_c * i`` (+ its delay); the window runs
    over ``[-t_c, N*2t_c - t_c]`` and is wrapped by ``U0(t_c) . U0(-t_c)``,
    which is how one-pixel database entries compose. Everything here is
    vectorized numpy, independent of the package's propagator loop.
    """
    bits = np.asarray(bits)
    n = bits.size
    h0 = build_drift(params)
    h1 = build_control(params.levels)
    amp = pulse_prefactor(params)
    dt = params.pixel / substeps_per_pixel
    t = -params.t_c + (np.arange(n * substeps_per_pixel) + 0.5) * dt
    u = np.zeros_like(t)
    centres = np.flatnonzero(bits) * params.pixel
    if delays is not None:
        centres = centres + np.asarray(delays)
    for c in centres:
        x = t - c
        inside = np.abs(x) <= params.t_c
        u[inside] += amp * np.exp(-x[inside] ** 2 / (2 * params.tau**2))
    hs = h0[None] + u[:, None, None] * h1[None]
    steps = expm_hermitian_batch(hs, dt)
    eye = np.eye(params.levels, dtype=complex)
    while len(steps) > 1:
        if len(steps) % 2:
            steps = np.concatenate([steps, eye[None]])
        steps = steps[1::2] @ steps[0::2]
    e = np.diag(h0).real
    wrap = np.exp(-1j * e * params.t_c)
    return (wrap[:, None] * steps[0]) * np.conj(wrap)[None, :]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
