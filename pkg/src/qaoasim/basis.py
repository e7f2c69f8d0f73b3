"""Enumeration and indexing of feasible computational basis states.

Bit convention used throughout the package: qubit ``i`` is bit ``i`` of the
integer label, so qubit 0 is the least significant bit.
"""
from __future__ import annotations

from functools import cached_property
from math import comb
from typing import Iterator

import numpy as np

from .errors import CapacityError, DomainError

MAX_ITER_QUBITS = 62
MAX_DENSE_QUBITS = 30
MAX_DIM = 1 << 30


class Bitstring(int):
    """An integer basis label that also knows its qubit count.

    ``Bitstring`` behaves exactly like ``int``; ``bits`` gives the 0/1 array
    view (index ``i`` is qubit ``i``).
    """

    def __new__(cls, value: int, n: int):
        obj = super().__new__(cls, value)
        obj.n = n
        return obj

    @property
    def bits(self) -> np.ndarray:
        return (int(self) >> np.arange(self.n)) & 1

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self.bits[i]

    def __repr__(self) -> str:
        return f"Bitstring({format(int(self), f'0{self.n}b')})"


def _check_n(n: int, limit: int = MAX_ITER_QUBITS) -> None:
    if not 1 <= n <= limit:
        raise CapacityError(f"qubit count must be in [1, {limit}], got {n}")


def states(n: int) -> Iterator[Bitstring]:
    """Yield all ``2**n`` bitstrings in increasing integer order."""
    _check_n(n)
    for x in range(1 << n):
        yield Bitstring(x, n)


def gosper_next(x: int) -> int:
    """Return the next larger integer with the same popcount as ``x``."""
    if x <= 0:
        raise DomainError("gosper_next requires a positive integer")
    c = x & -x
    r = x + c
    return (((r ^ x) >> 2) // c) | r


def dicke_states(n: int, k: int) -> Iterator[Bitstring]:
    """Yield every weight-``k`` word of ``n`` bits in increasing order.

    Successors are produced with Gosper's hack starting at ``2**k - 1``.
    """
    _check_n(n)
    if not 0 <= k <= n:
        raise DomainError(f"Hamming weight k={k} outside [0, {n}]")
    if k == 0:
        yield Bitstring(0, n)
        return
    x = (1 << k) - 1
    stop = 1 << n
    while x < stop:
        yield Bitstring(x, n)
        x = gosper_next(x)


def _as_int(x) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    arr = np.asarray(x, dtype=np.int64)
    return int(np.dot(arr, 1 << np.arange(arr.size, dtype=np.int64)))


def dicke_rank(x, n: int, k: int) -> int:
    """Combinadic index of weight-``k`` word ``x`` within ``dicke_states(n, k)``."""
    x = _as_int(x)
    if x < 0 or x >> n:
        raise DomainError(f"{x} is not an {n}-bit word")
    if x.bit_count() != k:
        raise DomainError(f"popcount({x}) = {x.bit_count()}, expected {k}")
    r = 0
    j = 0
    for c in range(n):
        if (x >> c) & 1:
            j += 1
            r += comb(c, j)
    return r


def dicke_unrank(i: int, n: int, k: int) -> int:
    """Inverse of :func:`dicke_rank`."""
    if not 0 <= k <= n:
        raise DomainError(f"Hamming weight k={k} outside [0, {n}]")
    if not 0 <= i < comb(n, k):
        raise DomainError(f"index {i} outside [0, C({n},{k}))")
    x = 0
    c = n - 1
    for j in range(k, 0, -1):
        while comb(c, j) > i:
            c -= 1
        x |= 1 << c
        i -= comb(c, j)
        c -= 1
    return x


def _binom_table(n: int, k: int) -> np.ndarray:
    # table[c, j] = C(c, j) for 0 <= c <= n, 0 <= j <= k
    return np.array([[comb(c, j) for j in range(k + 1)] for c in range(n + 1)], dtype=np.int64)


def dicke_rank_array(xs: np.ndarray, n: int, k: int) -> np.ndarray:
    """Vectorized :func:`dicke_rank`; inputs are assumed to have weight ``k``."""
    xs = np.asarray(xs, dtype=np.int64)
    table = _binom_table(n, k)
    rank = np.zeros(xs.shape, dtype=np.int64)
    seen = np.zeros(xs.shape, dtype=np.int64)
    for c in range(n):
        bit = (xs >> c) & 1
        seen += bit
        rank += bit * table[c, np.minimum(seen, k)]
    return rank


def dicke_unrank_array(idx: np.ndarray, n: int, k: int) -> np.ndarray:
    """Vectorized :func:`dicke_unrank`."""
    r = np.array(idx, dtype=np.int64, copy=True)
    out = np.zeros(r.shape, dtype=np.int64)
    table = _binom_table(n, k)
    upper = np.full(r.shape, n, dtype=np.int64)
    for j in range(k, 0, -1):
        col = table[:n, j]
        # largest c < upper with C(c, j) <= r; col is nondecreasing in c
        c = np.searchsorted(col, r, side="right") - 1
        c = np.minimum(c, upper - 1)
        out |= np.left_shift(1, c, dtype=np.int64)
        r -= col[c]
        upper = c
    return out


class BasisSet:
    """The feasible basis states a simulation runs over.

    Either the full ``n``-qubit space (``k is None``), the weight-``k`` Dicke
    subspace, or an explicit caller-supplied list of states.  States are
    always stored in strictly increasing integer order and ``states[i]`` is the
    label of amplitude ``i``.
    """

    def __init__(self, n: int, k: int | None = None, *, _explicit: np.ndarray | None = None):
        _check_n(n)
        if k is not None and not 0 <= k <= n:
            raise DomainError(f"Hamming weight k={k} outside [0, {n}]")
        if _explicit is None:
            if k is None and n > MAX_DENSE_QUBITS:
                raise CapacityError(f"full basis limited to n <= {MAX_DENSE_QUBITS}, got {n}")
            if k is not None and comb(n, k) > MAX_DIM:
                raise CapacityError(f"C({n},{k}) exceeds the supported dimension {MAX_DIM}")
        self.n = n
        self.k = k
        self._explicit = _explicit

    @classmethod
    def full(cls, n: int) -> BasisSet:
        return cls(n)

    @classmethod
    def dicke(cls, n: int, k: int) -> BasisSet:
        return cls(n, k)

    @classmethod
    def from_states(cls, n: int, labels) -> BasisSet:
        """Basis over an arbitrary feasible set given as integer labels."""
        arr = np.unique(np.asarray(labels, dtype=np.int64))
        if arr.size == 0:
            raise DomainError("explicit basis needs at least one state")
        if arr.size != len(labels):
            raise DomainError("explicit basis contains duplicate states")
        if arr[0] < 0 or int(arr[-1]) >> n:
            raise DomainError(f"explicit states must be {n}-bit words")
        if arr.size > MAX_DIM:
            raise CapacityError("explicit basis too large")
        return cls(n, None, _explicit=arr)

    @property
    def is_full(self) -> bool:
        return self.k is None and self._explicit is None

    @property
    def is_dicke(self) -> bool:
        return self.k is not None

    @property
    def is_explicit(self) -> bool:
        return self._explicit is not None

    @cached_property
    def dim(self) -> int:
        if self._explicit is not None:
            return int(self._explicit.size)
        if self.k is None:
            return 1 << self.n
        return comb(self.n, self.k)

    @cached_property
    def states(self) -> np.ndarray:
        """Integer labels of all feasible states, increasing."""
        if self._explicit is not None:
            arr = self._explicit
        elif self.k is None:
            arr = np.arange(self.dim, dtype=np.int64)
        else:
            arr = dicke_unrank_array(np.arange(self.dim, dtype=np.int64), self.n, self.k)
        arr.setflags(write=False)
        return arr

    def bit_matrix(self) -> np.ndarray:
        """``(dim, n)`` array of 0/1 with column ``i`` holding qubit ``i``."""
        return ((self.states[:, None] >> np.arange(self.n)) & 1).astype(np.uint8)

    def unrank(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise DomainError(f"index {i} outside [0, {self.dim})")
        if self.is_full:
            return int(i)
        if self.k is not None:
            return dicke_unrank(i, self.n, self.k)
        return int(self._explicit[i])

    def rank(self, x) -> int:
        x = _as_int(x)
        if self.is_full:
            if not 0 <= x < self.dim:
                raise DomainError(f"{x} is not an {self.n}-bit word")
            return x
        if self.k is not None:
            return dicke_rank(x, self.n, self.k)
        j = int(np.searchsorted(self._explicit, x))
        if j == self.dim or self._explicit[j] != x:
            raise DomainError(f"{x} is not in the explicit basis")
        return j

    def rank_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.is_full:
            return xs.copy()
        if self.k is not None:
            return dicke_rank_array(xs, self.n, self.k)
        return np.searchsorted(self._explicit, xs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BasisSet):
            return NotImplemented
        if self is other:
            return True
        if (self.n, self.k, self.is_explicit) != (other.n, other.k, other.is_explicit):
            return False
        if self.is_explicit:
            return np.array_equal(self._explicit, other._explicit)
        return True

    def __hash__(self) -> int:
        extra = self._explicit.tobytes() if self._explicit is not None else b""
        return hash((self.n, self.k, extra))

    def __repr__(self) -> str:
        if self.is_explicit:
            return f"BasisSet(n={self.n}, explicit, dim={self.dim})"
        if self.k is None:
            return f"BasisSet(n={self.n})"
        return f"BasisSet(n={self.n}, k={self.k})"
