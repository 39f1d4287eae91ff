"""Gate-time sweeps and Monte-Carlo clock-jitter studies."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from .errors import NonIntegerPixelCount
from .ga import GAConfig, GARun, optimize
from .model import UnitaryDatabase
from .sequence import (
    FidelityEvaluator,
    PulseSequence,
    TargetGate,
    fidelity,
    phase_table,
    pauli_y,
    truncated_initial_sequence,
)

log = logging.getLogger(__name__)


def pixel_count(gate_time: float, pixel: float) -> int:
    n = round(gate_time / pixel)
    if n < 1 or abs(n * pixel - gate_time) > 1e-9 * max(gate_time, pixel):
        raise NonIntegerPixelCount(
            f"gate time {gate_time:.6g} s is not a positive multiple of the {pixel:.6g} s pixel"
        )
    return n


# -- quantum speed limit -----------------------------------------------------

@dataclass
class SweepRow:
    gate_time: float
    n_pixels: int
    best_error: float
    generations: int
    terminated_by: str
    best: PulseSequence | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["gate_ns,pixels,best_error,generations"]
        for r in self.rows:
            lines.append(f"{r.gate_time * 1e9:.12g},{r.n_pixels},{r.best_error:.17g},{r.generations}")
        return "\n".join(lines) + "\n"


def optimize_gate_time(gate_time: float, db: UnitaryDatabase, ga_config: GAConfig,
                       target: TargetGate | None = None, threads: int = 1) -> tuple[PulseSequence, GARun]:
    """Run the GA at one gate time, seeded with the truncated evenly spaced train."""
    params = db.params
    n = pixel_count(gate_time, params.pixel)
    seed_seq = truncated_initial_sequence(params, n)
    evaluator = FidelityEvaluator(db, n, target, threads=threads)
    run = optimize(seed_seq, evaluator, ga_config)
    return PulseSequence(run.best_genome, params.pixel), run


def speed_limit_sweep(gate_times, db: UnitaryDatabase, ga_config: GAConfig = GAConfig(),
                      target: TargetGate | None = None, threads: int = 1) -> SweepResult:
    """One GA run per gate time; the pulse width stays fixed, so N scales with time."""
    for t in gate_times:
        pixel_count(t, db.params.pixel)
    result = SweepResult()
    for t in gate_times:
        best, run = optimize_gate_time(t, db, ga_config, target, threads)
        row = SweepRow(t, best.n_pixels, 1.0 - run.best_fitness, run.generations_used,
                       run.terminated_by, best)
        log.info("gate %.3g ns: error %.3e after %d generations", t * 1e9,
                 row.best_error, row.generations)
        result.rows.append(row)
    return result


# -- timing jitter -----------------------------------------------------------

@dataclass(frozen=True)
class JitterSpec:
    """Per-pulse timing noise. ``sigma`` in seconds.

    ``internal_model`` only matters for ``mode='internal'``:
    ``independent_sqrt_k`` draws pulse k (1-based) with std ``sqrt(k)*sigma``;
    ``random_walk`` accumulates i.i.d. N(0, sigma^2) steps.
    """

    sigma: float
    mode: Literal["external", "internal"] = "external"
    runs: int = 1000
    seed: int = 0
    internal_model: Literal["independent_sqrt_k", "random_walk"] = "independent_sqrt_k"

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.mode not in ("external", "internal"):
            raise ValueError("mode must be 'external' or 'internal'")
        if self.internal_model not in ("independent_sqrt_k", "random_walk"):
            raise ValueError("internal_model must be 'independent_sqrt_k' or 'random_walk'")


@dataclass(frozen=True)
class JitterResult:
    mean_error: float
    std_error: float
    runs: int

    @property
    def stderr(self) -> float:
        return self.std_error / math.sqrt(self.runs)


def jittered_pulse(db: UnitaryDatabase, delta_t: float) -> np.ndarray:
    """``U0(-dt) u1 U0(dt)``: the pulse arriving ``dt`` late (early if negative)."""
    if delta_t == 0:
        return db.u1.copy()
    return db.free(-delta_t) @ db.u1 @ db.free(delta_t)


def draw_delays(spec: JitterSpec, n_pulses: int, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal(n_pulses) * spec.sigma
    if spec.mode == "external":
        return eps
    if spec.internal_model == "random_walk":
        return np.cumsum(eps)
    return eps * np.sqrt(np.arange(1, n_pulses + 1))


def jitter_errors(seq: PulseSequence, db: UnitaryDatabase, spec: JitterSpec,
                  target: TargetGate | None = None, threads: int = 1) -> np.ndarray:
    """Gate error of every Monte-Carlo run, in run order.

    Run ``r`` draws from its own stream seeded by ``(spec.seed, r)``, so the
    output does not depend on ``threads``.
    """
    target = target or pauli_y(db.dim)
    phases = phase_table(db, seq.n_pixels)
    energies = db.drift_energies
    n_pulses = seq.n_pulses

    def one(r: int) -> float:
        rng = np.random.default_rng([spec.seed, r])
        delays = draw_delays(spec, n_pulses, rng)
        u = _kernels.evolve_bits_jittered(seq.bits, db.u1, energies, phases, delays)
        return 1.0 - fidelity(u, target)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return np.array(list(pool.map(one, range(spec.runs))))
    return np.array([one(r) for r in range(spec.runs)])


def jitter_eval(seq: PulseSequence, db: UnitaryDatabase, spec: JitterSpec,
                target: TargetGate | None = None, threads: int = 1) -> JitterResult:
    """Mean and sample standard deviation of the gate error over ``spec.runs`` runs."""
    errors = jitter_errors(seq, db, spec, target, threads)
    std = float(errors.std(ddof=1)) if errors.size > 1 else 0.0
    return JitterResult(float(errors.mean()), std, errors.size)


def jitter_scan(seq: PulseSequence, db: UnitaryDatabase, sigmas, modes=("external", "internal"),
                runs: int = 1000, seed: int = 0, internal_model: str = "independent_sqrt_k",
                target: TargetGate | None = None, threads: int = 1) -> list[tuple[float, str, JitterResult]]:
    rows = []
    for mode in modes:
        for sigma in sigmas:
            spec = JitterSpec(sigma, mode, runs, seed, internal_model)
            rows.append((sigma, mode, jitter_eval(seq, db, spec, target, threads)))
    return rows


def jitter_csv(rows) -> str:
    lines = ["sigma_ps,mode,mean_error,std_error,runs"]
    for sigma, mode, res in rows:
        lines.append(f"{sigma * 1e12:.12g},{mode},{res.mean_error:.17g},{res.std_error:.17g},{res.runs}")
    return "\n".join(lines) + "\n"
