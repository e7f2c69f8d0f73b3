"""Exact gradients of the QAOA expectation value.

:func:`value_and_gradient` runs one forward simulation, then walks the rounds
backwards carrying the state ``psi`` and the adjoint ``lam = U_later^dagger C
psi_final`` together in a ``(dim, 2)`` buffer.  Each unitary
``exp(-i theta H)`` contributes ``2 Im <lam|H|psi>`` and is then undone on both
columns, so no intermediate states are stored and the cost is a small
constant multiple of one expectation evaluation.
"""
from __future__ import annotations

import numpy as np

from .cost import CostTable
from .mixer import Mixer, MixerKind
from .sim import (AnglesLike, AngleSchedule, MixersLike, _coerce_initial, _fill_phases,
                  _matmul_into, _prepare, _run, _scale_rows, _wht, expectation)


def _mixer_grad_and_undo(pair: np.ndarray, beta: float, m: Mixer, scratch: np.ndarray) -> float:
    """Return ``2 Im <lam|H_M|psi>`` and rewind ``exp(-i beta H_M)`` on both columns."""
    if m.kind is MixerKind.GROVER:
        s = pair.mean(axis=0)
        # <lam|u><u|psi> = conj(sum lam) * sum psi / dim
        g = 2.0 * (np.conj(s[1]) * s[0]).imag * m.dim
        pair += (np.exp(1j * beta) - 1.0) * s
        return float(g)
    if m.kind is MixerKind.XDIAGONAL:
        _wht(pair, scratch)
        psi, lam = pair[:, 0], pair[:, 1]
        g = 2.0 * np.dot(m.zdiag, (lam.conj() * psi).imag)
        ph = scratch.reshape(-1)[: m.dim]
        _fill_phases(ph, m.zdiag, m.zlevels, -beta)
        _scale_rows(pair, ph)
        _wht(pair, scratch)
        return float(g)
    # eigen: work in the eigenbasis, V^dagger applied to both columns at once
    _matmul_into(m.Vh, pair, scratch)
    psi, lam = scratch[:, 0], scratch[:, 1]
    g = 2.0 * np.dot(m.D, (lam.conj() * psi).imag)
    ph = pair.reshape(-1)[: m.dim]
    np.multiply(m.D, 1j * beta, out=ph)
    np.exp(ph, out=ph)
    _scale_rows(scratch, ph)
    _matmul_into(m.V, scratch, pair)
    return float(g)


def value_and_gradient(angles: AnglesLike, mixers: MixersLike, cost: CostTable,
                       initial_state=None):
    """Expectation value together with its partial derivatives.

    Returns ``(value, dbetas, dgammas)``.  ``dbetas`` mirrors the shape of the
    schedule's betas (a list of arrays for nested schedules).
    """
    schedule, rounds = _prepare(angles, mixers, cost)
    basis = cost.basis
    dim = basis.dim
    pair = np.empty((dim, 2), dtype=np.complex128)
    scratch = np.empty((dim, 2), dtype=np.complex128)

    psi = pair[:, 0]
    if initial_state is None:
        start = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    else:
        start = _coerce_initial(initial_state, basis)
    # forward pass on a contiguous column buffer, then pack into the pair
    fwd = scratch.reshape(-1)[:dim]
    fwd_scratch = scratch.reshape(-1)[dim:]
    fwd[:] = start
    _run(schedule, rounds, cost, fwd, fwd_scratch)
    psi[:] = fwd
    values = cost.values
    pair[:, 1] = values * psi
    value = float(np.dot(values, psi.real ** 2 + psi.imag ** 2))

    dgam = np.zeros(schedule.p)
    dbet = [np.zeros(schedule.round_betas(r).size) for r in range(schedule.p)]
    phases = scratch.reshape(-1)[:dim]
    for r in range(schedule.p - 1, -1, -1):
        betas = schedule.round_betas(r)
        for j in range(len(rounds[r]) - 1, -1, -1):
            dbet[r][j] = _mixer_grad_and_undo(pair, betas[j], rounds[r][j], scratch)
        psi, lam = pair[:, 0], pair[:, 1]
        dgam[r] = 2.0 * np.dot(values, (lam.conj() * psi).imag)
        _fill_phases(phases, values, cost.levels, -schedule.gammas[r])
        _scale_rows(pair, phases)

    if schedule.nested:
        return value, dbet, dgam
    return value, np.array([b[0] for b in dbet]), dgam


def gradient(angles: AnglesLike, mixers: MixersLike, cost: CostTable, initial_state=None):
    """``(dbetas, dgammas)`` of the expectation value."""
    _, db, dg = value_and_gradient(angles, mixers, cost, initial_state)
    return db, dg


def finite_difference_gradient(angles: AnglesLike, mixers: MixersLike, cost: CostTable,
                               h: float = 1e-5, initial_state=None):
    """Central-difference gradient, two expectation evaluations per angle."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    schedule = angles if isinstance(angles, AngleSchedule) else AngleSchedule.from_flat(angles)
    x = schedule.flat()
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = expectation(schedule.with_flat(xp), mixers, cost, initial_state)
        fm = expectation(schedule.with_flat(xm), mixers, cost, initial_state)
        g[i] = (fp - fm) / (2 * h)
    shaped = schedule.with_flat(g)
    return shaped.betas, shaped.gammas
