"""Binary pulse sequences: seed construction, evolution, fidelity and
level populations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import EmptySequence, PeriodTooShort, SequenceFormatError
from .model import ModelParams, UnitaryDatabase


@dataclass(frozen=True, eq=False)
class PulseSequence:
    """A bit string over the pixel grid; 1 = pulse, 0 = free evolution."""

    bits: np.ndarray
    pixel: float = 10e-12

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8).ravel()
        if np.any(bits > 1):
            raise SequenceFormatError("bits must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        if not isinstance(other, PulseSequence):
            return NotImplemented
        return self.pixel == other.pixel and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.pixel, self.bits.tobytes()))

    @property
    def n_pixels(self) -> int:
        return self.bits.size

    @property
    def gate_time(self) -> float:
        return self.n_pixels * self.pixel

    @property
    def n_pulses(self) -> int:
        return int(self.bits.sum())

    @property
    def pulse_indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def concat(self, other: "PulseSequence") -> "PulseSequence":
        """``self`` followed in time by ``other``."""
        if other.pixel != self.pixel:
            raise ValueError("pixel lengths differ")
        return PulseSequence(np.concatenate([self.bits, other.bits]), self.pixel)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, s: str, pixel: float = 10e-12) -> "PulseSequence":
        s = s.strip()
        bad = set(s) - {"0", "1"}
        if bad:
            raise SequenceFormatError(f"invalid characters in sequence: {sorted(bad)}")
        return cls(np.frombuffer(s.encode(), dtype=np.uint8) - ord("0"), pixel)

    def dumps(self) -> str:
        header = f"# pixel_ps={self.pixel * 1e12:.12g} gate_ns={self.gate_time * 1e9:.12g}"
        return f"{header}\n{self.to_string()}\n"

    @classmethod
    def loads(cls, text: str) -> "PulseSequence":
        pixel = None
        body = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    if key == "pixel_ps":
                        pixel = float(value) * 1e-12
                continue
            body.append(line)
        if pixel is None:
            raise SequenceFormatError("sequence file lacks a '# pixel_ps=...' header")
        if len(body) != 1:
            raise SequenceFormatError("sequence file must hold exactly one bit line")
        return cls.from_string(body[0], pixel)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "PulseSequence":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class TargetGate:
    """Pauli-Y on the qubit subspace; ``leak_phase`` sets the leakage diagonal."""

    levels: int = 3
    leak_phase: float = 0.0
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.zeros((self.levels, self.levels), dtype=np.complex128)
        m[0, 1] = -1.0
        m[1, 0] = 1.0
        for k in range(2, self.levels):
            m[k, k] = np.exp(1j * self.leak_phase)
        object.__setattr__(self, "matrix", m)

    qubit_dim = 2

    @property
    def qubit_block(self) -> np.ndarray:
        return self.matrix[:2, :2]


def pauli_y(levels: int = 3, leak_phase: float = 0.0) -> TargetGate:
    return TargetGate(levels, leak_phase)


def precession_spacing(params: ModelParams) -> int:
    """Pixels per qubit precession period, rounded to the nearest integer."""
    period = 2 * math.pi / params.omega
    if period < params.pixel:
        raise PeriodTooShort(
            f"precession period {period:.3e} s is shorter than one pixel {params.pixel:.3e} s"
        )
    return max(1, round(period / params.pixel))


def initial_sequence(params: ModelParams, n_pulses: int = 100) -> PulseSequence:
    """Evenly spaced train: one pulse per precession period."""
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    s = precession_spacing(params)
    bits = np.zeros(n_pulses * s, dtype=np.uint8)
    bits[::s] = 1
    return PulseSequence(bits, params.pixel)


def truncated_initial_sequence(params: ModelParams, n_pixels: int) -> PulseSequence:
    """Evenly spaced train cut (or extended) to ``n_pixels``."""
    s = precession_spacing(params)
    bits = np.zeros(n_pixels, dtype=np.uint8)
    bits[::s] = 1
    return PulseSequence(bits, params.pixel)


def phase_table(db: UnitaryDatabase, max_gap: int) -> np.ndarray:
    """``table[g, j] = exp(-i E_j g * pixel)``: diagonal of ``u0**g``."""
    g = np.arange(max_gap + 1)[:, None]
    return np.exp(-1j * db.drift_energies[None, :] * (g * db.params.pixel))


def evolve(seq: PulseSequence, db: UnitaryDatabase) -> np.ndarray:
    """Total propagator ``U(t_{N-1}) ... U(t_0)`` (first pixel acts first)."""
    if seq.n_pixels == 0:
        raise EmptySequence("cannot evolve an empty sequence")
    return _kernels.evolve_bits(seq.bits, db.u1, phase_table(db, seq.n_pixels))


def evolve_naive(seq: PulseSequence, db: UnitaryDatabase) -> np.ndarray:
    """Reference dense product of database entries, one per pixel."""
    if seq.n_pixels == 0:
        raise EmptySequence("cannot evolve an empty sequence")
    u = np.eye(db.dim, dtype=np.complex128)
    for b in seq.bits:
        u = (db.u1 if b else db.u0) @ u
    return u


def fidelity(u: np.ndarray, target: TargetGate) -> float:
    """Projected average fidelity ``|Tr(P U_t^dag P U P)|^2 / 4``."""
    u = np.asarray(u)
    if u.shape != target.matrix.shape:
        raise ValueError(f"shape {u.shape} does not match target {target.matrix.shape}")
    overlap = np.sum(np.conj(target.qubit_block) * u[:2, :2])
    return float(0.25 * abs(overlap) ** 2)


def gate_error(seq: PulseSequence, db: UnitaryDatabase, target: TargetGate | None = None) -> float:
    target = target or pauli_y(db.dim)
    return 1.0 - fidelity(evolve(seq, db), target)


class FidelityEvaluator:
    """Batch fidelity of raw bit arrays against a fixed database and target.

    With ``threads > 1`` the population is split into contiguous chunks
    scored concurrently (the kernel releases the GIL); results keep genome
    order.
    """

    def __init__(self, db: UnitaryDatabase, n_pixels: int, target: TargetGate | None = None,
                 threads: int = 1):
        self.db = db
        self.threads = max(1, int(threads))
        self.n_pixels = n_pixels
        self.target = target or pauli_y(db.dim)
        self._phases = phase_table(db, n_pixels)
        self._block = np.ascontiguousarray(self.target.qubit_block)

    def __call__(self, bits) -> float:
        return float(self.batch(np.asarray(bits, dtype=np.uint8)[None, :])[0])

    def batch(self, population: np.ndarray) -> np.ndarray:
        pop = np.ascontiguousarray(population, dtype=np.uint8)
        if pop.shape[1] != self.n_pixels:
            raise ValueError(f"genomes must have length {self.n_pixels}")
        if self.threads == 1 or len(pop) < 2 * self.threads:
            return _kernels.batch_fidelity(pop, self.db.u1, self._phases, self._block)
        chunks = np.array_split(pop, self.threads)
        with ThreadPoolExecutor(self.threads) as ex:
            parts = ex.map(
                lambda c: _kernels.batch_fidelity(c, self.db.u1, self._phases, self._block),
                chunks,
            )
            return np.concatenate(list(parts))


def populations(seq: PulseSequence, db: UnitaryDatabase, initial_level: int = 0) -> np.ndarray:
    """Level occupations after each pixel, shape (N + 1, d); row 0 is the start."""
    if not 0 <= initial_level < db.dim:
        raise ValueError(f"initial_level must be in [0, {db.dim})")
    psi = np.zeros(db.dim, dtype=np.complex128)
    psi[initial_level] = 1.0
    out = np.empty((seq.n_pixels + 1, db.dim))
    out[0] = np.abs(psi) ** 2
    u0 = np.diag(db.u0).copy()
    for i, b in enumerate(seq.bits, start=1):
        psi = db.u1 @ psi if b else u0 * psi
        out[i] = np.abs(psi) ** 2
    return out
