"""Dense matrix exponentials and time-ordered propagators for small Hermitian
generators (dimension 2 to 8).

All functions return fresh ``complex128`` arrays and never mutate inputs.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

HERMITIAN_TOL = 1e-12
MAX_DIM = 8


def _check_square(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {h.shape}")
    if not 2 <= h.shape[0] <= MAX_DIM:
        raise DimensionMismatch(f"dimension {h.shape[0]} outside [2, {MAX_DIM}]")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    return h


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) < tol


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i h t)`` for a Hermitian ``h``.

    The exponential is rebuilt from the eigendecomposition
    ``sum_k exp(-i lambda_k t) |v_k><v_k|``, so the result is unitary to
    rounding regardless of ``|h t|``. ``h`` is in angular frequency (rad/s)
    and ``t`` in seconds; any sign of ``t`` is allowed.

    Raises
    ------
    NonHermitianInput
        If ``max|h - h^dagger| >= 1e-12`` (relative to the largest entry
        when the matrix is large in magnitude).
    DimensionMismatch
        If ``h`` is not square with dimension in [2, 8].
    """
    h = _check_square(h)
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) >= HERMITIAN_TOL * scale:
        raise NonHermitianInput("generator is not Hermitian")
    if not np.isfinite(t):
        raise ValueError("duration must be finite")
    # Diagonal generators are the common case (drift); skip the eigensolver.
    if not np.any(h - np.diag(np.diag(h))):
        return np.diag(np.exp(-1j * np.diag(h).real * t))
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def expm_hermitian_batch(hs: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i h dt)`` for a stack of Hermitian generators, shape (n, d, d)."""
    evals, evecs = np.linalg.eigh(hs)
    return (evecs * np.exp(-1j * evals * dt)[:, None, :]) @ np.conj(
        np.swapaxes(evecs, -1, -2)
    )


def ordered_propagator(
    h_sampler: Callable[[float], np.ndarray],
    t_start: float,
    t_end: float,
    substeps: int = 200,
) -> np.ndarray:
    """Time-ordered exponential of ``-i * integral h(t) dt`` over ``[t_start, t_end]``.

    The interval is cut into ``substeps`` equal slices; each slice uses the
    generator sampled at its midpoint (second-order accurate). Later slices
    multiply from the left.
    """
    if not t_end > t_start:
        raise ValueError("t_end must be greater than t_start")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    dt = (t_end - t_start) / substeps
    samples = [np.asarray(h_sampler(t_start + (k + 0.5) * dt)) for k in range(substeps)]
    dims = {h.shape for h in samples}
    if len(dims) != 1:
        raise DimensionMismatch(f"sampler returned inconsistent shapes {sorted(dims)}")
    hs = np.stack(samples).astype(np.complex128)
    _check_square(hs[0])
    if not np.all(np.isfinite(hs)):
        raise ValueError("sampler returned non-finite entries")
    scale = max(1.0, float(np.max(np.abs(hs))))
    if np.max(np.abs(hs - np.conj(np.swapaxes(hs, -1, -2)))) >= HERMITIAN_TOL * scale:
        raise NonHermitianInput("sampled generator is not Hermitian")
    steps = expm_hermitian_batch(hs, dt)
    u = steps[0]
    for step in steps[1:]:
        u = step @ u
    return u
