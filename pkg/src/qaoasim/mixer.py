"""Mixer Hamiltonians in the diagonalized forms the simulator consumes.

Four representations are supported:

``XDIAGONAL``
    sums of products of Pauli X on the full space, stored as the diagonal of
    the same polynomial in Pauli Z; evolution is a Walsh-Hadamard sandwich.
``EIGEN`` / ``CUSTOM``
    a dense Hermitian matrix on the feasible subspace stored as ``V, D`` with
    ``H = V diag(D) V^dagger``.
``GROVER``
    the projector onto the uniform superposition of the basis; nothing is
    stored, evolution is a rank-one update.
"""
from __future__ import annotations

import enum
import itertools
import os
import struct
import zlib
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .basis import BasisSet
from .cost import _levels
from .errors import CapacityError, CompatibilityError, DomainError, FormatError

MAX_EIGEN_DIM = 16384

MAGIC = b"QMIX"
VERSION = 1
_HEADER = struct.Struct("<4sHBIIQ")
_UNCONSTRAINED = 0xFFFFFFFF


class MixerKind(enum.IntEnum):
    XDIAGONAL = 0
    EIGEN = 1
    GROVER = 2
    CUSTOM = 3


@dataclass(frozen=True, eq=False)
class Mixer:
    kind: MixerKind
    basis: BasisSet
    zdiag: np.ndarray | None = None
    V: np.ndarray | None = None
    D: np.ndarray | None = None
    label: str = ""

    @cached_property
    def zlevels(self):
        return _levels(self.zdiag) if self.zdiag is not None else None

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def has_eigen(self) -> bool:
        return self.kind in (MixerKind.EIGEN, MixerKind.CUSTOM)

    @cached_property
    def Vh(self) -> np.ndarray:
        """Conjugate transpose of ``V`` (a view when ``V`` is real)."""
        if np.isrealobj(self.V):
            return self.V.T
        return np.ascontiguousarray(self.V.conj().T)

    def dense(self) -> np.ndarray:
        """The Hamiltonian as a dense ``dim x dim`` matrix (small bases only)."""
        if self.has_eigen:
            return (self.V * self.D) @ self.Vh
        if self.kind is MixerKind.GROVER:
            return np.full((self.dim, self.dim), 1.0 / self.dim)
        from scipy.linalg import hadamard

        h = hadamard(self.dim) / np.sqrt(self.dim)
        return h @ np.diag(self.zdiag) @ h

    def __repr__(self) -> str:
        return f"Mixer({self.kind.name}, {self.basis!r}{', ' + self.label if self.label else ''})"


def _popcount(xs: np.ndarray) -> np.ndarray:
    return np.bitwise_count(xs).astype(np.int64)


def _elementary_symmetric(values: Sequence[float], max_order: int) -> np.ndarray:
    # e[r] of the given values for r = 0..max_order, by the standard recurrence
    e = np.zeros(max_order + 1)
    e[0] = 1.0
    for z in values:
        e[1:] = e[1:] + z * e[:-1]
    return e


def mixer_x(orders: Iterable[int], n: int) -> Mixer:
    """Mixer ``sum_r sum_{|S|=r} prod_{i in S} X_i`` on the full ``n``-qubit space.

    ``orders=[1]`` is the transverse field.  The Z-basis diagonal only depends
    on the popcount ``w`` of a state (``w`` eigenvalues are -1), so the
    elementary symmetric polynomials are evaluated once per popcount and then
    gathered.
    """
    orders = sorted(set(int(r) for r in orders))
    if not orders:
        raise DomainError("mixer_x needs at least one term order")
    for r in orders:
        if not 1 <= r <= n:
            raise DomainError(f"term order {r} outside [1, {n}]")
    basis = BasisSet(n)
    per_weight = np.empty(n + 1)
    for w in range(n + 1):
        e = _elementary_symmetric([-1.0] * w + [1.0] * (n - w), orders[-1])
        per_weight[w] = sum(e[r] for r in orders)
    zdiag = per_weight[_popcount(basis.states)]
    return Mixer(MixerKind.XDIAGONAL, basis, zdiag=zdiag, label=f"x{orders}")


def mixer_x_terms(terms, n: int) -> Mixer:
    """Mixer ``sum_t c_t prod_{i in S_t} X_i`` from explicit terms.

    ``terms`` is an iterable of ``(indices, coeff)`` pairs.
    """
    basis = BasisSet(n)
    labels = basis.states
    zdiag = np.zeros(basis.dim)
    for idx, coeff in terms:
        idx = [int(i) for i in idx]
        if not idx:
            raise DomainError("empty mixer term")
        if len(set(idx)) != len(idx):
            raise DomainError(f"repeated qubit in term {idx}")
        for i in idx:
            if not 0 <= i < n:
                raise DomainError(f"qubit {i} outside [0, {n})")
        mask = sum(1 << i for i in idx)
        parity = _popcount(labels & mask) & 1
        zdiag += float(coeff) * (1 - 2 * parity)
    return Mixer(MixerKind.XDIAGONAL, basis, zdiag=zdiag, label="x-terms")


def _check_eigen_dim(dim: int) -> None:
    if dim > MAX_EIGEN_DIM:
        raise CapacityError(f"dense mixer of dimension {dim} exceeds limit {MAX_EIGEN_DIM}")


def xy_matrix(basis: BasisSet, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Matrix of ``sum_{(a,b)} X_a X_b + Y_a Y_b`` restricted to ``basis``.

    ``X_a X_b + Y_a Y_b`` maps ``|..0_a..1_b..>`` to ``2|..1_a..0_b..>`` and
    annihilates states where bits ``a`` and ``b`` agree.
    """
    _check_eigen_dim(basis.dim)
    labels = basis.states
    H = np.zeros((basis.dim, basis.dim))
    rows = np.arange(basis.dim)
    for a, b in pairs:
        differ = (((labels >> a) ^ (labels >> b)) & 1).astype(bool)
        flipped = labels[differ] ^ ((1 << a) | (1 << b))
        H[rows[differ], basis.rank_array(flipped)] = 2.0
    return H


def _constrained_basis(n: int, k: int) -> BasisSet:
    if not 1 <= k <= n - 1:
        raise DomainError(f"constrained mixers need 1 <= k <= n-1, got n={n}, k={k}")
    _check_eigen_dim(comb(n, k))
    return BasisSet(n, k)


def _eigen(H: np.ndarray, basis: BasisSet, kind: MixerKind, label: str) -> Mixer:
    if not np.iscomplexobj(H) or not np.any(H.imag):
        D, V = np.linalg.eigh(np.real(H))
    else:
        D, V = np.linalg.eigh(H)
    return Mixer(kind, basis, V=V, D=D, label=label)


def _cached(path, basis: BasisSet, build) -> Mixer:
    if path is not None and os.path.exists(path):
        return load_mixer(path, basis)
    m = build()
    if path is not None:
        save_mixer(m, path)
    return m


def clique_pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def ring_pairs(n: int, closed: bool = True) -> list[tuple[int, int]]:
    pairs = {(i, i + 1) for i in range(n - 1)}
    if closed and n > 2:
        pairs.add((0, n - 1))
    return sorted(pairs)


def mixer_clique(n: int, k: int, *, file: str | os.PathLike | None = None) -> Mixer:
    """Clique XY mixer on the weight-``k`` subspace.

    If ``file`` exists the stored decomposition is loaded (and checked against
    ``n, k``); otherwise it is computed and written there.
    """
    basis = _constrained_basis(n, k)
    return _cached(file, basis,
                   lambda: _eigen(xy_matrix(basis, clique_pairs(n)), basis, MixerKind.EIGEN, "clique"))


def mixer_ring(n: int, k: int, *, closed: bool = True, file: str | os.PathLike | None = None) -> Mixer:
    """Ring XY mixer on the weight-``k`` subspace.

    Couples neighbours ``(i, i+1)`` and, unless ``closed=False``, the
    wrap-around pair ``(n-1, 0)``.
    """
    basis = _constrained_basis(n, k)
    return _cached(file, basis,
                   lambda: _eigen(xy_matrix(basis, ring_pairs(n, closed)), basis, MixerKind.EIGEN, "ring"))


def mixer_grover(basis: BasisSet) -> Mixer:
    return Mixer(MixerKind.GROVER, basis, label="grover")


def mixer_custom(H, basis: BasisSet, *, atol: float = 1e-10) -> Mixer:
    """Mixer from an arbitrary Hermitian matrix over ``basis``.

    The matrix must be a Hamiltonian; pass ``-i log U`` yourself if you start
    from a unitary.
    """
    H = np.asarray(H)
    if H.shape != (basis.dim, basis.dim):
        raise DomainError(f"matrix shape {H.shape} does not match basis dimension {basis.dim}")
    _check_eigen_dim(basis.dim)
    if not np.all(np.isfinite(H)):
        raise DomainError("mixer matrix has non-finite entries")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > atol:
        raise DomainError("mixer matrix is not Hermitian")
    return _eigen(H, basis, MixerKind.CUSTOM, "custom")


# --------------------------------------------------------------------------
# persistence

def save_mixer(m: Mixer, path: str | os.PathLike) -> None:
    """Write an eigendecomposed mixer to the binary cache format.

    Layout (little endian): ``QMIX``, u16 version, u8 kind, u32 n,
    u32 k (``0xFFFFFFFF`` for the full space), u64 dim, ``dim`` float64
    eigenvalues, ``dim*dim`` complex128 entries of ``V`` row-major, then the
    CRC32 of every preceding byte.
    """
    if not m.has_eigen:
        raise DomainError(f"only eigendecomposed mixers are cached, got {m.kind.name}")
    if m.basis.is_explicit:
        raise DomainError("mixers over explicit state lists cannot be cached")
    k = _UNCONSTRAINED if m.basis.k is None else m.basis.k
    header = _HEADER.pack(MAGIC, VERSION, int(m.kind), m.basis.n, k, m.dim)
    body = header + np.asarray(m.D, dtype="<f8").tobytes() \
        + np.ascontiguousarray(m.V, dtype="<c16").tobytes()
    crc = struct.pack("<I", zlib.crc32(body))
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(body)
        fh.write(crc)
    os.replace(tmp, path)


def load_mixer(path: str | os.PathLike, basis: BasisSet | None = None) -> Mixer:
    """Read a mixer written by :func:`save_mixer`.

    When ``basis`` is given the stored ``n``/``k``/dimension must match it.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size + 4:
        raise FormatError(f"{path}: truncated mixer file")
    magic, version, kind, n, k, dim = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    try:
        kind = MixerKind(kind)
    except ValueError:
        raise FormatError(f"{path}: unknown mixer kind {kind}") from None
    if kind not in (MixerKind.EIGEN, MixerKind.CUSTOM):
        raise FormatError(f"{path}: kind {kind.name} carries no decomposition")
    expected = _HEADER.size + 8 * dim + 16 * dim * dim + 4
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} does not match header (expected {expected})")
    (crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(raw[:-4]) != crc:
        raise FormatError(f"{path}: CRC mismatch")
    k = None if k == _UNCONSTRAINED else k
    try:
        stored = BasisSet(n, k)
    except (DomainError, CapacityError) as exc:
        raise FormatError(f"{path}: invalid basis in header: {exc}") from None
    if stored.dim != dim:
        raise FormatError(f"{path}: dimension {dim} inconsistent with n={n}, k={k}")
    if basis is not None and (basis.n, basis.k, basis.dim) != (n, k, dim):
        raise CompatibilityError(
            f"{path} holds a mixer for n={n}, k={k}; requested n={basis.n}, k={basis.k}"
        )
    off = _HEADER.size
    D = np.frombuffer(raw, dtype="<f8", count=dim, offset=off).astype(np.float64)
    V = np.frombuffer(raw, dtype="<c16", count=dim * dim, offset=off + 8 * dim)
    V = V.reshape(dim, dim).astype(np.complex128)
    if not np.any(V.imag):
        V = np.ascontiguousarray(V.real)
    return Mixer(kind, basis if basis is not None else stored, V=V, D=D, label=os.fspath(path))
