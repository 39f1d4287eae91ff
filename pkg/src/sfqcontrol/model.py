"""Driven d-level transmon: Hamiltonians, the SFQ pulse shape and the
two-entry unitary database ``{u0, u1}``.

Internal units are SI: seconds and angular frequency in rad/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .errors import DatabaseFormatError, InvalidParams, OutOfWindow
from .propagator import expm_hermitian, ordered_propagator

TWO_PI = 2.0 * math.pi
DEFAULT_SUBSTEPS = 4000


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the driven transmon.

    Defaults: qubit frequency 5 GHz, anharmonicity -200 MHz, pulse area pi/100,
    pixel length 2*t_c = 10 ps, Gaussian width tau = t_c/3, three levels.
    """

    omega: float = TWO_PI * 5e9
    delta: float = TWO_PI * -200e6
    dtheta: float = math.pi / 100
    t_c: float = 5e-12
    tau: float | None = None
    levels: int = 3

    def __post_init__(self):
        if self.tau is None:
            object.__setattr__(self, "tau", self.t_c / 3)
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.omega > 0, "omega > 0"),
            (self.t_c > 0, "t_c > 0"),
            (self.tau > 0, "tau > 0"),
            (0 < self.dtheta < math.pi, "0 < dtheta < pi"),
            # small slack so tau = t_c/3 passes despite rounding
            (self.tau <= self.t_c / 3 * (1 + 1e-12), "tau <= t_c/3"),
            (int(self.levels) == self.levels and self.levels >= 2, "levels >= 2"),
            (self.levels <= 8, "levels <= 8"),
            (all(map(math.isfinite, (self.omega, self.delta, self.dtheta, self.t_c, self.tau))),
             "finite values"),
        ]
        for ok, name in checks:
            if not ok:
                raise InvalidParams(f"invalid model parameters: requires {name}")

    @property
    def pixel(self) -> float:
        return 2.0 * self.t_c

    @property
    def min_pulses(self) -> int:
        """Lower bound on the pulse count for a pi rotation."""
        return math.ceil(math.pi / self.dtheta - 1e-9)


def build_drift(params: ModelParams) -> np.ndarray:
    """Diagonal drift with Duffing energies ``k*omega + k(k-1)/2 * delta``."""
    k = np.arange(params.levels, dtype=float)
    return np.diag(k * params.omega + 0.5 * k * (k - 1) * params.delta).astype(np.complex128)


def build_control(levels: int) -> np.ndarray:
    """Control operator with ``<k|H1|k+1> = -i sqrt(k+1)/2`` (Hermitian)."""
    if levels < 2:
        raise InvalidParams("levels must be >= 2")
    h1 = np.zeros((levels, levels), dtype=np.complex128)
    for k in range(levels - 1):
        c = math.sqrt(k + 1) / 2
        h1[k, k + 1] = -1j * c
        h1[k + 1, k] = 1j * c
    return h1


def _window_grid(params: ModelParams, substeps: int) -> np.ndarray:
    # Simpson needs an even interval count; use the substep grid (doubled if odd).
    n = substeps if substeps % 2 == 0 else 2 * substeps
    return np.linspace(-params.t_c, params.t_c, n + 1)


def pulse_prefactor(params: ModelParams, substeps: int = DEFAULT_SUBSTEPS) -> float:
    """Gaussian prefactor A such that the Simpson area over the window is dtheta."""
    t = _window_grid(params, substeps)
    area = simpson(np.exp(-t**2 / (2 * params.tau**2)), x=t)
    return params.dtheta / area


def pulse_amplitude(t, params: ModelParams, substeps: int = DEFAULT_SUBSTEPS):
    """Truncated Gaussian control amplitude u(t) in rad/s, ``|t| <= t_c``.

    Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) > params.t_c * (1 + 1e-12)):
        raise OutOfWindow(f"pulse is only defined on [-t_c, t_c], t_c = {params.t_c}")
    amp = pulse_prefactor(params, substeps) * np.exp(-t_arr**2 / (2 * params.tau**2))
    return float(amp) if amp.ndim == 0 else amp


def free_evolution(params: ModelParams, t: float) -> np.ndarray:
    """Drift propagator ``exp(-i H0 t)``; negative ``t`` gives the adjoint."""
    return expm_hermitian(build_drift(params), t)


def pulse_window_propagator(params: ModelParams, substeps: int = DEFAULT_SUBSTEPS) -> np.ndarray:
    """Time-ordered propagator of ``H0 + u(t) H1`` from -t_c to t_c."""
    h0 = build_drift(params)
    h1 = build_control(params.levels)
    amp = pulse_prefactor(params, substeps)
    inv2tau2 = 1.0 / (2 * params.tau**2)

    def sampler(t):
        return h0 + amp * math.exp(-t * t * inv2tau2) * h1

    return ordered_propagator(sampler, -params.t_c, params.t_c, substeps)


@dataclass(frozen=True)
class UnitaryDatabase:
    """Precompiled pixel propagators: ``u0`` (free) and ``u1`` (one pulse)."""

    u0: np.ndarray
    u1: np.ndarray
    params: ModelParams
    substeps: int = DEFAULT_SUBSTEPS

    @property
    def dim(self) -> int:
        return self.u0.shape[0]

    @cached_property
    def drift_energies(self) -> np.ndarray:
        return np.diag(build_drift(self.params)).real.copy()

    def free(self, t: float) -> np.ndarray:
        return free_evolution(self.params, t)

    def save(self, path) -> None:
        Path(path).write_text(dumps_database(self))

    @classmethod
    def load(cls, path) -> "UnitaryDatabase":
        return loads_database(Path(path).read_text())


def build_database(params: ModelParams, substeps: int = DEFAULT_SUBSTEPS) -> UnitaryDatabase:
    """Compile ``u0 = U0(2 t_c)`` and ``u1 = U0(t_c) T[...] U0(-t_c)``.

    ``T[...]`` is the time-ordered propagator of the window ``[-t_c, t_c]``
    with the pulse centred at 0. A product of entries therefore equals
    ``U0(t_c) V U0(-t_c)``, where ``V`` is the lab-frame evolution with pulse
    ``i`` centred at ``2 t_c * i``.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    u0 = free_evolution(params, params.pixel)
    window = pulse_window_propagator(params, substeps)
    u1 = free_evolution(params, params.t_c) @ window @ free_evolution(params, -params.t_c)
    return UnitaryDatabase(u0=u0, u1=u1, params=params, substeps=substeps)


# -- text serialization -------------------------------------------------------

DB_FORMAT = "sfqcontrol-db 1"
_PARAM_KEYS = ("omega", "delta", "dtheta", "t_c", "tau", "levels")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_database(db: UnitaryDatabase) -> str:
    lines = [DB_FORMAT, f"dim {db.dim}"]
    for key in _PARAM_KEYS:
        value = getattr(db.params, key)
        lines.append(f"{key} {value if key == 'levels' else _fmt(value)}")
    lines.append(f"substeps {db.substeps}")
    for name, mat in (("u0", db.u0), ("u1", db.u1)):
        lines.append(name)
        for row in mat:
            lines.append(" ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def loads_database(text: str) -> UnitaryDatabase:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    try:
        if lines[0] != DB_FORMAT:
            raise DatabaseFormatError(f"unknown database header {lines[0]!r}")
        dim = int(lines[1].split()[1])
        values = {}
        for i, key in enumerate(_PARAM_KEYS):
            name, raw = lines[2 + i].split()
            if name != key:
                raise DatabaseFormatError(f"expected {key}, found {name}")
            values[key] = int(raw) if key == "levels" else float(raw)
        substeps = int(lines[2 + len(_PARAM_KEYS)].split()[1])
        pos = 3 + len(_PARAM_KEYS)
        mats = {}
        for name in ("u0", "u1"):
            if lines[pos] != name:
                raise DatabaseFormatError(f"expected block {name}")
            rows = []
            for r in range(dim):
                nums = [float(x) for x in lines[pos + 1 + r].split()]
                rows.append([complex(a, b) for a, b in zip(nums[::2], nums[1::2])])
            mats[name] = np.array(rows, dtype=np.complex128)
            pos += dim + 1
    except (IndexError, ValueError) as exc:
        if isinstance(exc, DatabaseFormatError):
            raise
        raise DatabaseFormatError(f"malformed database file: {exc}") from exc
    params = ModelParams(**values)
    if mats["u0"].shape != (dim, dim) or params.levels != dim:
        raise DatabaseFormatError("matrix dimension does not match header")
    return UnitaryDatabase(u0=mats["u0"], u1=mats["u1"], params=params, substeps=substeps)
