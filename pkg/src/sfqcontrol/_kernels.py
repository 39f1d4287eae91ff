"""Compiled inner loops for bit-string evolution.

The drift propagator is diagonal, so a run of ``g`` free pixels is a row
scaling by ``phases[g]``; only pulses cost a dense product.
"""
import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def evolve_bits(bits, u1, phases):
    d = u1.shape[0]
    u = np.eye(d, dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    gap = 0
    for b in bits:
        if b == 0:
            gap += 1
            continue
        for i in range(d):
            for j in range(d):
                u[i, j] *= phases[gap, i]
        for i in range(d):
            for j in range(d):
                acc = 0j
                for k in range(d):
                    acc += u1[i, k] * u[k, j]
                tmp[i, j] = acc
        u[:, :] = tmp
        gap = 0
    for i in range(d):
        for j in range(d):
            u[i, j] *= phases[gap, i]
    return u


@nb.njit(cache=True, nogil=True)
def evolve_bits_jittered(bits, u1, energies, phases, delays):
    """Like ``evolve_bits`` but pulse ``k`` is conjugated by a drift of ``delays[k]``."""
    d = u1.shape[0]
    u = np.eye(d, dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    uj = np.empty((d, d), dtype=np.complex128)
    gap = 0
    k_pulse = 0
    for b in bits:
        if b == 0:
            gap += 1
            continue
        dt = delays[k_pulse]
        k_pulse += 1
        for i in range(d):
            for j in range(d):
                uj[i, j] = u1[i, j] * np.exp(1j * (energies[i] - energies[j]) * dt)
        for i in range(d):
            for j in range(d):
                u[i, j] *= phases[gap, i]
        for i in range(d):
            for j in range(d):
                acc = 0j
                for k in range(d):
                    acc += uj[i, k] * u[k, j]
                tmp[i, j] = acc
        u[:, :] = tmp
        gap = 0
    for i in range(d):
        for j in range(d):
            u[i, j] *= phases[gap, i]
    return u


@nb.njit(cache=True, nogil=True)
def batch_fidelity(population, u1, phases, target_block):
    """Projected fidelity for each row of a (P, N) uint8 population.

    Only the two computational-basis columns are propagated.
    """
    n_pop = population.shape[0]
    d = u1.shape[0]
    out = np.empty(n_pop)
    cols = np.empty((d, 2), dtype=np.complex128)
    tmp = np.empty((d, 2), dtype=np.complex128)
    for p in range(n_pop):
        cols[:, :] = 0.0
        cols[0, 0] = 1.0
        cols[1, 1] = 1.0
        gap = 0
        for b in population[p]:
            if b == 0:
                gap += 1
                continue
            for i in range(d):
                ph = phases[gap, i]
                cols[i, 0] *= ph
                cols[i, 1] *= ph
            for i in range(d):
                a0 = 0j
                a1 = 0j
                for k in range(d):
                    a0 += u1[i, k] * cols[k, 0]
                    a1 += u1[i, k] * cols[k, 1]
                tmp[i, 0] = a0
                tmp[i, 1] = a1
            cols[:, :] = tmp
            gap = 0
        overlap = 0j
        for i in range(2):
            ph = phases[gap, i]
            for j in range(2):
                overlap += np.conj(target_block[i, j]) * cols[i, j] * ph
        out[p] = 0.25 * (overlap.real**2 + overlap.imag**2)
    return out
