"""Grover-mixer QAOA on a compressed state.

With the Grover mixer every basis state with the same objective value keeps
the same amplitude, so a state is fully described by one amplitude per
distinct value.  Only the value histogram (distinct values and their
degeneracies) is needed, and counting it is the only step that touches every
basis state.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Callable

import numpy as np

from .basis import MAX_DIM, dicke_unrank, gosper_next
from .errors import CapacityError, DomainError, FormatError
from .sim import AnglesLike, as_schedule

BIN_TOL = 1e-12
CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class CompressedCost:
    values: np.ndarray          # strictly increasing distinct objective values
    degeneracies: np.ndarray    # int64, >= 1
    n: int
    k: int | None = None
    maximize: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        g = np.asarray(self.degeneracies, dtype=np.int64)
        if v.shape != g.shape or v.ndim != 1 or v.size == 0:
            raise DomainError("values and degeneracies must be equal-length nonempty vectors")
        if np.any(np.diff(v) <= 0):
            raise DomainError("distinct values must be strictly increasing")
        if np.any(g < 1):
            raise DomainError("degeneracies must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "degeneracies", g)
        if self.total != self.expected_total:
            raise DomainError(f"degeneracies sum to {self.total}, basis has {self.expected_total} states")

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def total(self) -> int:
        return int(self.degeneracies.sum())

    @property
    def expected_total(self) -> int:
        return (1 << self.n) if self.k is None else comb(self.n, self.k)

    @property
    def best_index(self) -> int:
        return self.m - 1 if self.maximize else 0

    @classmethod
    def from_table(cls, table) -> CompressedCost:
        """Histogram of an already materialized :class:`CostTable`."""
        basis = table.basis
        if basis.is_explicit:
            raise DomainError("compressed simulation needs a full or Dicke basis")
        v, g = _bin(*np.unique(table.values, return_counts=True))
        return cls(v, g, basis.n, basis.k, table.maximize)


@dataclass(eq=False)
class CompressedState:
    amps: np.ndarray
    cost: CompressedCost

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.cost.degeneracies, np.abs(self.amps) ** 2))


def _bin(values: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # merge sorted distinct values closer than BIN_TOL into the lowest of the run
    if values.size == 0:
        return values, counts
    starts = np.concatenate([[True], np.diff(values) > BIN_TOL])
    group = np.cumsum(starts) - 1
    merged = np.zeros(int(group[-1]) + 1, dtype=np.int64)
    np.add.at(merged, group, counts)
    return values[starts], merged


def _merge(parts: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    # exact ordered reduce of per-worker histograms
    vals = np.concatenate([p[0] for p in parts])
    cnts = np.concatenate([p[1] for p in parts])
    uniq, inv = np.unique(vals, return_inverse=True)
    total = np.zeros(uniq.size, dtype=np.int64)
    np.add.at(total, inv, cnts)
    return uniq, total


def _histogram(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise DomainError("objective returned a non-finite value")
    u, c = np.unique(v, return_counts=True)
    return u, c.astype(np.int64)


def _count_range(f: Callable, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    parts = []
    for a in range(lo, hi, CHUNK):
        xs = np.arange(a, min(a + CHUNK, hi), dtype=np.int64)
        parts.append(_histogram(f(xs)))
    return _merge(parts) if parts else (np.empty(0), np.empty(0, dtype=np.int64))


def _count_gosper(f: Callable, n: int, k: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    # walk the Gosper chain from the word of rank lo for hi - lo steps
    parts = []
    x = dicke_unrank(lo, n, k)
    remaining = hi - lo
    buf = np.empty(min(CHUNK, max(remaining, 1)), dtype=np.int64)
    while remaining > 0:
        size = min(CHUNK, remaining)
        for i in range(size):
            buf[i] = x
            if k:
                x = gosper_next(x)
        parts.append(_histogram(f(buf[:size])))
        remaining -= size
    return _merge(parts) if parts else (np.empty(0), np.empty(0, dtype=np.int64))


def compress_cost(f: Callable, n: int, k: int | None = None, *, workers: int = 1,
                  maximize: bool = True) -> CompressedCost:
    """Exact value histogram of vectorized objective ``f`` over a basis.

    ``f`` maps an int64 array of basis labels to objective values.  The
    full space is split into contiguous integer ranges, a Dicke space into
    contiguous segments of its Gosper chain; each worker histograms its share
    and the partial histograms are reduced in a fixed order, so the result
    does not depend on ``workers``.
    """
    if workers < 1:
        raise DomainError("workers must be >= 1")
    if not 1 <= n <= 62:
        raise CapacityError(f"qubit count {n} outside [1, 62]")
    if k is not None and not 0 <= k <= n:
        raise DomainError(f"Hamming weight k={k} outside [0, {n}]")
    total = (1 << n) if k is None else comb(n, k)
    if total > MAX_DIM:
        raise CapacityError(f"{total} states exceed the counting limit {MAX_DIM}")
    bounds = [total * i // workers for i in range(workers + 1)]
    if k is None:
        job = lambda lo, hi: _count_range(f, lo, hi)
    else:
        job = lambda lo, hi: _count_gosper(f, n, k, lo, hi)
    spans = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if workers == 1:
        parts = [job(lo, hi) for lo, hi in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: job(*s), spans))
    values, counts = _bin(*_merge(parts))
    return CompressedCost(values, counts, n, k, maximize)


def initial_compressed(cost: CompressedCost) -> CompressedState:
    return CompressedState(np.full(cost.m, 1.0 / np.sqrt(cost.total), dtype=np.complex128), cost)


def simulate_compressed(angles: AnglesLike, cost: CompressedCost) -> CompressedState:
    """Grover-mixer QAOA on the compressed state; memory is O(m)."""
    schedule = as_schedule(angles)
    if schedule.nested:
        raise DomainError("compressed simulation takes one beta per round")
    amps = np.full(cost.m, 1.0 / np.sqrt(cost.total), dtype=np.complex128)
    g = cost.degeneracies.astype(np.float64)
    for beta, gamma in zip(schedule.betas, schedule.gammas):
        amps *= np.exp(-1j * gamma * cost.values)
        s = np.dot(g, amps) / cost.total
        amps += (np.exp(-1j * beta) - 1.0) * s
    return CompressedState(amps, cost)


def class_probabilities(st: CompressedState) -> np.ndarray:
    """Total probability carried by each distinct value."""
    return st.cost.degeneracies * (st.amps.real ** 2 + st.amps.imag ** 2)


def exp_value_compressed(st: CompressedState) -> float:
    return float(np.dot(class_probabilities(st), st.cost.values))


def ground_state_probability_compressed(st: CompressedState) -> float:
    return float(class_probabilities(st)[st.cost.best_index])


def save_histogram(cost: CompressedCost, path: str | os.PathLike) -> None:
    """Text cache: ``# n=<n> k=<k|full> total=<total>`` then ``value<TAB>count`` lines."""
    k = "full" if cost.k is None else str(cost.k)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={cost.n} k={k} total={cost.total}\n")
        for v, g in zip(cost.values, cost.degeneracies):
            fh.write(f"{_fmt(v)}\t{int(g)}\n")


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 2 ** 53 else repr(float(v))


def load_histogram(path: str | os.PathLike, maximize: bool = True) -> CompressedCost:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        try:
            fields = dict(tok.split("=", 1) for tok in header.lstrip("#").split())
            n = int(fields["n"])
            k = None if fields["k"] == "full" else int(fields["k"])
            total = int(fields["total"])
        except (KeyError, ValueError):
            raise FormatError(f"{path}: bad histogram header {header!r}") from None
        values, counts = [], []
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                v, g = line.split("\t")
                values.append(float(v))
                counts.append(int(g))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad histogram line {line!r}") from None
    try:
        cost = CompressedCost(np.array(values), np.array(counts, dtype=np.int64), n, k, maximize)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if cost.total != total:
        raise FormatError(f"{path}: header total {total} != {cost.total}")
    return cost
