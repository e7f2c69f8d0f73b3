"""Statevector simulation of alternating phase-separator / mixer rounds.

One round ``r`` applies ``exp(-i gamma_r H_C)`` followed by the round's
mixer(s) ``exp(-i beta_r H_M)``.  All kernels act in place on a working
amplitude buffer and reuse one scratch buffer of the same size.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .basis import BasisSet
from .cost import CostTable
from .errors import DomainError
from .mixer import Mixer, MixerKind

NORM_TOL = 1e-10


@dataclass(eq=False)
class StateVector:
    basis: BasisSet
    amps: np.ndarray

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


class AngleSchedule:
    """Per-round mixer angles ``betas`` and phase angles ``gammas``.

    ``betas[r]`` is either one float or, in the nested (multi-angle) form, a
    sequence with one angle per mixer applied in round ``r``.
    """

    def __init__(self, betas, gammas):
        self.gammas = np.array(gammas, dtype=np.float64).ravel()
        self.nested = any(np.ndim(b) > 0 for b in betas)
        if self.nested:
            self.betas = [np.atleast_1d(np.array(b, dtype=np.float64)) for b in betas]
        else:
            self.betas = np.array(betas, dtype=np.float64).ravel()
        if len(self.betas) != self.gammas.size:
            raise DomainError(f"{len(self.betas)} beta rounds but {self.gammas.size} gammas")
        if self.gammas.size < 1:
            raise DomainError("an angle schedule needs at least one round")

    @classmethod
    def from_flat(cls, angles) -> AngleSchedule:
        """Split ``[beta_1..beta_p, gamma_1..gamma_p]``."""
        angles = np.asarray(angles, dtype=np.float64).ravel()
        if angles.size % 2 or angles.size == 0:
            raise DomainError(f"flat angle vector must have even nonzero length, got {angles.size}")
        p = angles.size // 2
        return cls(angles[:p], angles[p:])

    @property
    def p(self) -> int:
        return self.gammas.size

    def round_betas(self, r: int) -> np.ndarray:
        return self.betas[r] if self.nested else self.betas[r:r + 1]

    def flat(self) -> np.ndarray:
        """Flat vector ``[all betas, gammas]`` (nested betas concatenated)."""
        b = np.concatenate(self.betas) if self.nested else self.betas
        return np.concatenate([b, self.gammas])

    def with_flat(self, x) -> AngleSchedule:
        """Same shape as ``self`` with values taken from a flat vector."""
        x = np.asarray(x, dtype=np.float64)
        if not self.nested:
            return AngleSchedule.from_flat(x)
        out, pos = [], 0
        for b in self.betas:
            out.append(x[pos:pos + b.size])
            pos += b.size
        return AngleSchedule(out, x[pos:])

    def __repr__(self) -> str:
        return f"AngleSchedule(betas={self.betas!r}, gammas={self.gammas!r})"


AnglesLike = Union[AngleSchedule, Sequence[float], np.ndarray]
MixersLike = Union[Mixer, Sequence[Mixer], Sequence[Sequence[Mixer]]]


def as_schedule(angles: AnglesLike) -> AngleSchedule:
    if isinstance(angles, AngleSchedule):
        return angles
    return AngleSchedule.from_flat(angles)


def round_mixers(mixers: MixersLike, schedule: AngleSchedule) -> list[list[Mixer]]:
    """Normalize the mixer argument to one list of mixers per round."""
    p = schedule.p
    if isinstance(mixers, Mixer):
        rounds = [[mixers]] * p
    else:
        mixers = list(mixers)
        if len(mixers) != p:
            raise DomainError(f"{len(mixers)} mixer rounds for p={p}")
        rounds = [[m] if isinstance(m, Mixer) else list(m) for m in mixers]
    for r, ms in enumerate(rounds):
        nb = schedule.round_betas(r).size
        if len(ms) != nb:
            raise DomainError(f"round {r + 1}: {len(ms)} mixers but {nb} beta angles")
        for m in ms:
            if not isinstance(m, Mixer):
                raise DomainError(f"round {r + 1}: {m!r} is not a Mixer")
    return rounds


# --------------------------------------------------------------------------
# raw kernels; ``a`` has shape (dim,) or (dim, t) and is C-contiguous

def _fill_phases(out: np.ndarray, values: np.ndarray, levels, angle: float) -> None:
    # out <- exp(-i * angle * values)
    if levels is not None:
        uniq, inv = levels
        np.take(np.exp(-1j * angle * uniq), inv, out=out)
    else:
        np.multiply(values, -1j * angle, out=out)
        np.exp(out, out=out)


def _scale_rows(a: np.ndarray, phases: np.ndarray) -> None:
    if a.ndim == 1:
        a *= phases
    else:
        a *= phases[:, None]


_HADAMARD: dict[int, np.ndarray] = {}


def _hadamard(k: int) -> np.ndarray:
    # normalized H^{(x)k} as a real 2^k x 2^k matrix
    if k not in _HADAMARD:
        h = np.array([[1.0]])
        for _ in range(k):
            h = np.block([[h, h], [h, -h]])
        _HADAMARD[k] = h * 2.0 ** (-k / 2)
    return _HADAMARD[k]


def _qubit_groups(n: int, width: int = 4) -> list[int]:
    # even group count so the ping-pong between buffers ends in the input
    g = -(-n // width)
    if g % 2 and n > 1:
        g += 1
    g = min(g, n)
    return [n // g + (1 if i < n % g else 0) for i in range(g)]


def _wht(a: np.ndarray, scratch: np.ndarray) -> None:
    """Normalized in-place Walsh-Hadamard transform along axis 0.

    Qubits are processed in blocks of a few at a time, each block contracted
    against a small dense Hadamard matrix; ``scratch`` (same shape as ``a``)
    is the ping-pong partner.
    """
    dim = a.shape[0]
    n = dim.bit_length() - 1
    inner = 2 * (a.size // dim)  # float64 words per row
    src, dst = a, scratch
    q = 0
    for k in _qubit_groups(n):
        xs = src.reshape(-1).view(np.float64).reshape(-1, 1 << k, (1 << q) * inner)
        xd = dst.reshape(-1).view(np.float64).reshape(-1, 1 << k, (1 << q) * inner)
        np.matmul(_hadamard(k), xs, out=xd)
        src, dst = dst, src
        q += k
    if src is not a:
        a[...] = src


def _matmul_into(M: np.ndarray, src: np.ndarray, out: np.ndarray) -> None:
    # out <- M @ src, without promoting a real M to complex
    if np.isrealobj(M):
        s = src.view(np.float64).reshape(src.shape[0], -1)
        o = out.view(np.float64).reshape(out.shape[0], -1)
        np.dot(M, s, out=o)
    else:
        np.dot(M, src, out=out)


def _eigen_evolve(a: np.ndarray, beta: float, m: Mixer, scratch: np.ndarray) -> None:
    # a <- V exp(-i beta D) V^dagger a, using a itself to hold the phases
    _matmul_into(m.Vh, a, scratch)
    ph = a.reshape(-1)[: m.dim]
    np.multiply(m.D, -1j * beta, out=ph)
    np.exp(ph, out=ph)
    _scale_rows(scratch, ph)
    _matmul_into(m.V, scratch, a)


def _grover_evolve(a: np.ndarray, beta: float) -> None:
    # exp(-i beta |u><u|) = 1 + (e^{-i beta} - 1)|u><u|, <u|a> u = mean(a)
    a += (np.exp(-1j * beta) - 1.0) * a.mean(axis=0)


def _xdiag_evolve(a: np.ndarray, beta: float, m: Mixer, scratch: np.ndarray) -> None:
    _wht(a, scratch)
    ph = scratch.reshape(-1)[: m.dim]
    _fill_phases(ph, m.zdiag, m.zlevels, beta)
    _scale_rows(a, ph)
    _wht(a, scratch)


def _evolve(a: np.ndarray, beta: float, m: Mixer, scratch: np.ndarray) -> None:
    if m.kind is MixerKind.XDIAGONAL:
        _xdiag_evolve(a, beta, m, scratch)
    elif m.kind is MixerKind.GROVER:
        _grover_evolve(a, beta)
    else:
        _eigen_evolve(a, beta, m, scratch)


# --------------------------------------------------------------------------
# public state-level operations

def _check_basis(state: StateVector, basis: BasisSet, what: str) -> None:
    if state.basis is not basis and state.basis != basis:
        raise DomainError(f"{what} basis {basis!r} does not match state basis {state.basis!r}")


def initial_state(basis: BasisSet) -> StateVector:
    """Uniform superposition over the feasible states."""
    return StateVector(basis, np.full(basis.dim, 1.0 / np.sqrt(basis.dim), dtype=np.complex128))


def apply_phase_separator(state: StateVector, gamma: float, cost: CostTable,
                          scratch: np.ndarray | None = None) -> None:
    _check_basis(state, cost.basis, "cost")
    if scratch is None:
        scratch = np.empty_like(state.amps)
    _fill_phases(scratch, cost.values, cost.levels, gamma)
    state.amps *= scratch


def walsh_hadamard(state: StateVector, scratch: np.ndarray | None = None) -> None:
    """Apply the normalized Hadamard on every qubit (full bases only)."""
    if not state.basis.is_full:
        raise DomainError("Walsh-Hadamard transform needs the full qubit space")
    if scratch is None:
        scratch = np.empty_like(state.amps)
    _wht(state.amps, scratch)


def apply_mixer(state: StateVector, beta: float, m: Mixer,
                scratch: np.ndarray | None = None) -> None:
    _check_basis(state, m.basis, "mixer")
    if scratch is None:
        scratch = np.empty_like(state.amps)
    _evolve(state.amps, beta, m, scratch)


def _coerce_initial(initial, basis: BasisSet) -> np.ndarray:
    if isinstance(initial, StateVector):
        _check_basis(initial, basis, "cost")
        amps = initial.amps
    else:
        amps = np.asarray(initial)
    if amps.shape != (basis.dim,):
        raise DomainError(f"initial state has shape {amps.shape}, expected ({basis.dim},)")
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > NORM_TOL:
        raise DomainError(f"initial state is not normalized (norm^2 = {norm!r})")
    return np.array(amps, dtype=np.complex128, copy=True)


def _run(schedule: AngleSchedule, rounds: list[list[Mixer]], cost: CostTable,
         amps: np.ndarray, scratch: np.ndarray) -> None:
    for r in range(schedule.p):
        _fill_phases(scratch, cost.values, cost.levels, schedule.gammas[r])
        amps *= scratch
        for m, beta in zip(rounds[r], schedule.round_betas(r)):
            _evolve(amps, beta, m, scratch)


@dataclass(eq=False)
class SimResult:
    state: StateVector
    cost: CostTable

    def exp_value(self) -> float:
        return float(np.dot(self.probabilities(), self.cost.values))

    def amplitudes(self) -> np.ndarray:
        return self.state.amps

    def probabilities(self) -> np.ndarray:
        a = self.state.amps
        return a.real ** 2 + a.imag ** 2

    def ground_state_probability(self) -> float:
        return float(self.probabilities()[self.cost.best_mask()].sum())

    def approximation_ratio(self) -> float:
        return self.cost.approximation_ratio(self.exp_value())


def _prepare(angles, mixers, cost):
    schedule = as_schedule(angles)
    rounds = round_mixers(mixers, schedule)
    for ms in rounds:
        for m in ms:
            if m.basis is not cost.basis and m.basis != cost.basis:
                raise DomainError(f"mixer basis {m.basis!r} does not match cost basis {cost.basis!r}")
    return schedule, rounds


def simulate(angles: AnglesLike, mixers: MixersLike, cost: CostTable,
             initial_state=None) -> SimResult:
    """Run a ``p``-round QAOA and return the final state with its cost table.

    ``angles`` is an :class:`AngleSchedule` or a flat vector
    ``[beta_1..beta_p, gamma_1..gamma_p]``.  ``mixers`` is one mixer, one per
    round, or (multi-angle form) a list per round matched by nested betas.
    The state starts uniform over ``cost.basis`` unless ``initial_state`` is
    given.
    """
    schedule, rounds = _prepare(angles, mixers, cost)
    basis = cost.basis
    if initial_state is None:
        amps = np.full(basis.dim, 1.0 / np.sqrt(basis.dim), dtype=np.complex128)
    else:
        amps = _coerce_initial(initial_state, basis)
    scratch = np.empty_like(amps)
    _run(schedule, rounds, cost, amps, scratch)
    return SimResult(StateVector(basis, amps), cost)


def exp_value(res: SimResult) -> float:
    return res.exp_value()


def amplitudes(res: SimResult) -> np.ndarray:
    return res.amplitudes()


def probabilities(res: SimResult) -> np.ndarray:
    return res.probabilities()


def ground_state_probability(res: SimResult) -> float:
    return res.ground_state_probability()


def expectation(angles: AnglesLike, mixers: MixersLike, cost: CostTable, initial_state=None) -> float:
    """Shorthand for ``simulate(...).exp_value()``."""
    return simulate(angles, mixers, cost, initial_state).exp_value()
