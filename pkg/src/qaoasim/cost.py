"""Objective functions and precomputed cost tables.

Every built-in objective comes in two flavours: a scalar form taking one
basis state (an integer label or a 0/1 sequence, qubit ``i`` at position
``i``) and a ``*_values`` form evaluating a whole integer array at once.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .basis import BasisSet, Bitstring
from .errors import DataError, DomainError, FormatError


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with 0-indexed vertices."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise DomainError(f"edge ({u}, {v}) outside [0, {self.n_vertices})")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise DomainError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class CnfFormula:
    n_vars: int
    clauses: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        norm = []
        for clause in self.clauses:
            clause = tuple(int(l) for l in clause)
            if not clause:
                raise DomainError("empty clause")
            for lit in clause:
                if lit == 0 or abs(lit) > self.n_vars:
                    raise DomainError(f"literal {lit} outside 1..{self.n_vars}")
                if -lit in clause:
                    raise DomainError(f"clause {clause} contains a variable and its negation")
            norm.append(clause)
        object.__setattr__(self, "clauses", tuple(norm))


# --------------------------------------------------------------------------
# scalar objectives

def _label(x, n: int) -> int:
    if isinstance(x, (int, np.integer)):
        x = int(x)
        if x < 0 or x >> n:
            raise DomainError(f"state {x} is not an {n}-bit word")
        return x
    bits = np.asarray(x).ravel()
    if bits.size != n:
        raise DomainError(f"bitstring has length {bits.size}, expected {n}")
    return int(np.dot(bits.astype(np.int64), 1 << np.arange(n, dtype=np.int64)))


def maxcut(graph: Graph, x) -> float:
    """Number of edges whose endpoints land on different sides."""
    x = _label(x, graph.n_vertices)
    return float(sum(((x >> u) ^ (x >> v)) & 1 for u, v in graph.edges))


def densest_subgraph(graph: Graph, x) -> float:
    """Number of edges with both endpoints selected."""
    x = _label(x, graph.n_vertices)
    return float(sum((x >> u) & (x >> v) & 1 for u, v in graph.edges))


def k_vertex_cover(graph: Graph, x) -> float:
    """Number of edges with at least one selected endpoint."""
    x = _label(x, graph.n_vertices)
    return float(sum(((x >> u) | (x >> v)) & 1 for u, v in graph.edges))


def ksat(formula: CnfFormula, x) -> float:
    """Number of satisfied clauses; variable ``v`` is qubit ``v - 1``."""
    x = _label(x, formula.n_vars)
    count = 0
    for clause in formula.clauses:
        for lit in clause:
            bit = (x >> (abs(lit) - 1)) & 1
            if bit == (lit > 0):
                count += 1
                break
    return float(count)


# --------------------------------------------------------------------------
# vectorized objectives over integer label arrays

def maxcut_values(graph: Graph, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    out = np.zeros(xs.shape, dtype=np.float64)
    for u, v in graph.edges:
        out += ((xs >> u) ^ (xs >> v)) & 1
    return out


def densest_subgraph_values(graph: Graph, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    out = np.zeros(xs.shape, dtype=np.float64)
    for u, v in graph.edges:
        out += (xs >> u) & (xs >> v) & 1
    return out


def k_vertex_cover_values(graph: Graph, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    out = np.zeros(xs.shape, dtype=np.float64)
    for u, v in graph.edges:
        out += ((xs >> u) | (xs >> v)) & 1
    return out


def ksat_values(formula: CnfFormula, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    out = np.zeros(xs.shape, dtype=np.float64)
    for clause in formula.clauses:
        sat = np.zeros(xs.shape, dtype=bool)
        for lit in clause:
            bit = ((xs >> (abs(lit) - 1)) & 1).astype(bool)
            sat |= bit if lit > 0 else ~bit
        out += sat
    return out


# --------------------------------------------------------------------------
# cost tables

MAX_LEVELS = 4096


def _levels(values: np.ndarray):
    # phases for tables with few distinct values are gathered from a short
    # lookup instead of exponentiating every entry
    uniq, inv = np.unique(values, return_inverse=True)
    if uniq.size > MAX_LEVELS or 4 * uniq.size > values.size:
        return None
    return uniq, inv.astype(np.intp)

@dataclass(frozen=True, eq=False)
class CostTable:
    """Objective values aligned with the states of a :class:`BasisSet`.

    ``values[i]`` is the objective of ``basis.states[i]``; ``maximize`` records
    which extremum counts as the optimum.
    """

    basis: BasisSet
    values: np.ndarray
    maximize: bool = True
    best_value: float = field(init=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if vals.size != self.basis.dim:
            raise DomainError(f"{vals.size} values for a basis of dimension {self.basis.dim}")
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            i = int(bad[0])
            raise DataError(f"non-finite cost {vals[i]} at state {self.basis.states[i]:0{self.basis.n}b}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        best = vals.max() if self.maximize else vals.min()
        object.__setattr__(self, "best_value", float(best))

    @cached_property
    def levels(self):
        """``(distinct, inverse)`` when the table has few distinct values, else None."""
        return _levels(self.values)

    @property
    def orientation(self) -> str:
        return "max" if self.maximize else "min"

    @property
    def same_sign(self) -> bool:
        return bool(self.values.min() >= 0 or self.values.max() <= 0)

    def best_mask(self) -> np.ndarray:
        return self.values == self.best_value

    def approximation_ratio(self, expectation: float) -> float:
        """``expectation / best_value``; defined for nonnegative tables only."""
        if self.values.min() < 0 or self.best_value == 0:
            raise DomainError(
                "approximation ratio needs nonnegative values with a nonzero optimum; "
                "add an offset to the objective"
            )
        return float(expectation) / self.best_value


def _orientation_flag(orientation) -> bool:
    if isinstance(orientation, bool):
        return orientation
    if orientation in ("max", "maximize"):
        return True
    if orientation in ("min", "minimize"):
        return False
    raise DomainError(f"unknown orientation {orientation!r}")


def build_cost_table(
    f: Callable,
    basis: BasisSet,
    orientation="max",
    *,
    vectorized: bool = False,
    workers: int = 1,
) -> CostTable:
    """Evaluate ``f`` on every state of ``basis``.

    Scalar ``f`` receives a :class:`Bitstring` (usable as an int or indexed as a
    0/1 sequence).  With ``vectorized=True`` it receives integer label arrays
    and must return arrays of the same length.  The index range is split into
    contiguous blocks across ``workers`` threads; each block writes its own
    slice so the result does not depend on the worker count.
    """
    maximize = _orientation_flag(orientation)
    if workers < 1:
        raise DomainError("workers must be >= 1")
    labels = basis.states
    n = basis.n
    values = np.empty(basis.dim, dtype=np.float64)

    def run(lo: int, hi: int) -> None:
        if vectorized:
            out = np.asarray(f(labels[lo:hi]), dtype=np.float64)
            if out.shape != (hi - lo,):
                raise DataError(f"vectorized cost returned shape {out.shape}, expected {(hi - lo,)}")
            values[lo:hi] = out
        else:
            for i in range(lo, hi):
                values[i] = f(Bitstring(int(labels[i]), n))

    bounds = np.linspace(0, basis.dim, min(workers, basis.dim) + 1).astype(int)
    if workers == 1:
        run(0, basis.dim)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(run, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
                fut.result()
    return CostTable(basis, values, maximize)


def threshold_transform(table: CostTable, t: float, strict: bool = True) -> CostTable:
    """Binary table marking states above (or at) the threshold ``t``."""
    mask = table.values > t if strict else table.values >= t
    return CostTable(table.basis, mask.astype(np.float64), maximize=True)


# --------------------------------------------------------------------------
# instance files and generators

def read_edge_list(path: str | os.PathLike, n_vertices: int | None = None) -> Graph:
    """Read a ``u v`` per line edge list; ``#`` starts a comment."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer vertex in {line!r}") from None
    if n_vertices is None:
        n_vertices = 1 + max((max(e) for e in edges), default=-1)
    try:
        return Graph(n_vertices, tuple(edges))
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_edge_list(graph: Graph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={graph.n_vertices}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def read_dimacs(path: str | os.PathLike) -> CnfFormula:
    """Parse a DIMACS CNF file."""
    n_vars = n_clauses = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("c") or line.startswith("%"):
                continue
            if line.startswith("p"):
                parts = line.split()
                if len(parts) != 4 or parts[1] != "cnf":
                    raise FormatError(f"{path}:{lineno}: bad problem line {line!r}")
                n_vars, n_clauses = int(parts[2]), int(parts[3])
                continue
            if n_vars is None:
                raise FormatError(f"{path}:{lineno}: clause before 'p cnf' line")
            for tok in line.split():
                try:
                    lit = int(tok)
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad literal {tok!r}") from None
                if lit == 0:
                    clauses.append(tuple(current))
                    current = []
                else:
                    current.append(lit)
    if n_vars is None:
        raise FormatError(f"{path}: missing 'p cnf' line")
    if current:
        clauses.append(tuple(current))
    if len(clauses) != n_clauses:
        raise FormatError(f"{path}: header declares {n_clauses} clauses, found {len(clauses)}")
    try:
        return CnfFormula(n_vars, tuple(clauses))
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_dimacs(formula: CnfFormula, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"p cnf {formula.n_vars} {len(formula.clauses)}\n")
        for clause in formula.clauses:
            fh.write(" ".join(map(str, clause)) + " 0\n")


def erdos_renyi(n: int, p: float = 0.5, seed=None) -> Graph:
    """G(n, p): each of the ``n(n-1)/2`` pairs, in lexicographic order, is kept
    independently with probability ``p``."""
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, tuple(edges))


def random_ksat(n: int, density: float, k: int = 3, seed=None) -> CnfFormula:
    """Random k-SAT with ``round(density * n)`` clauses over distinct variables.

    Each clause picks ``k`` distinct variables uniformly and negates each with
    probability 1/2.  Duplicate clauses may occur.
    """
    if not 1 <= k <= n:
        raise DomainError(f"clause width {k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    m = int(round(density * n))
    clauses = []
    for _ in range(m):
        vars_ = rng.choice(n, size=k, replace=False) + 1
        neg = rng.random(k) < 0.5
        clauses.append(tuple(int(-v if s else v) for v, s in zip(vars_, neg)))
    return CnfFormula(n, tuple(clauses))


def read_cost_values(path: str | os.PathLike) -> np.ndarray:
    """Whitespace-separated floats, ``#`` comments allowed."""
    vals: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0]
            for tok in line.split():
                try:
                    vals.append(float(tok))
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad value {tok!r}") from None
    return np.array(vals, dtype=np.float64)


def constant(value: float) -> Callable:
    """Vectorized constant objective."""
    def f(xs: np.ndarray) -> np.ndarray:
        return np.full(np.shape(xs), float(value))
    return f


__all__ = [
    "Graph", "CnfFormula", "CostTable",
    "maxcut", "densest_subgraph", "k_vertex_cover", "ksat",
    "maxcut_values", "densest_subgraph_values", "k_vertex_cover_values", "ksat_values",
    "build_cost_table", "threshold_transform",
    "read_edge_list", "write_edge_list", "read_dimacs", "write_dimacs",
    "erdos_renyi", "random_ksat", "read_cost_values", "constant",
]
