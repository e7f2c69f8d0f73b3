"""Classical angle-finding outer loop.

The objective handed to the optimizers is ``-<C>`` (the cost tables are
maximized), with exact gradients from :mod:`qaoasim.grad`.  Angles are flat
vectors ``[beta_1..beta_p, gamma_1..gamma_p]``.
"""
from __future__ import annotations

import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .cost import CostTable
from .errors import DomainError, FormatError, OptimizerError
from .grad import value_and_gradient
from .mixer import Mixer
from .sim import AngleSchedule, expectation

log = logging.getLogger(__name__)

DEFAULT_START = 0.1
TWO_PI = 2 * math.pi


@dataclass
class OptimizerConfig:
    hops: int = 50
    step_size: float = 0.3
    temperature: float = 1.0
    restarts: int = 100
    rng_seed: int = 0
    max_local_iters: int = 1000
    tolerance: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        if self.hops < 0 or self.restarts < 1 or self.max_local_iters < 1 or self.workers < 1:
            raise DomainError(f"invalid optimizer config {self}")
        if self.step_size <= 0 or self.temperature < 0 or self.tolerance <= 0:
            raise DomainError(f"invalid optimizer config {self}")


@dataclass
class RoundRecord:
    p: int
    best_betas: np.ndarray
    best_gammas: np.ndarray
    best_expectation: float
    evaluations_used: int = 0

    def __post_init__(self):
        self.best_betas = np.asarray(self.best_betas, dtype=np.float64)
        self.best_gammas = np.asarray(self.best_gammas, dtype=np.float64)
        if self.best_betas.shape != (self.p,) or self.best_gammas.shape != (self.p,):
            raise DomainError(f"round {self.p} record needs {self.p} betas and gammas")

    @property
    def angles(self) -> np.ndarray:
        return np.concatenate([self.best_betas, self.best_gammas])

    @property
    def schedule(self) -> AngleSchedule:
        return AngleSchedule(self.best_betas, self.best_gammas)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RoundRecord):
            return NotImplemented
        return (self.p == other.p
                and np.array_equal(self.best_betas, other.best_betas)
                and np.array_equal(self.best_gammas, other.best_gammas)
                and self.best_expectation == other.best_expectation
                and self.evaluations_used == other.evaluations_used)


class Objective:
    """``-<C>`` as a function of flat angles, with its gradient.

    The last evaluation is cached so asking for value and gradient at the same
    point costs one simulation.
    """

    def __init__(self, mixer, cost: CostTable, initial_state=None):
        self.mixer = mixer
        self.cost = cost
        self.initial_state = initial_state
        self.evaluations = 0
        self._x = None
        self._val = None
        self._grad = None

    def _eval(self, x) -> None:
        x = np.asarray(x, dtype=np.float64)
        if self._x is not None and np.array_equal(x, self._x):
            return
        sched = AngleSchedule.from_flat(x)
        v, db, dg = value_and_gradient(sched, self.mixer, self.cost, self.initial_state)
        self.evaluations += 1
        self._x = x.copy()
        self._val = -v
        self._grad = -np.concatenate([db, dg])

    def value(self, x) -> float:
        self._eval(x)
        return self._val

    def grad(self, x) -> np.ndarray:
        self._eval(x)
        return self._grad.copy()

    __call__ = value


def bfgs_minimize(f: Callable, grad_f: Callable, x0, *, tolerance: float = 1e-8,
                  max_iters: int = 1000) -> tuple[np.ndarray, float]:
    """Local minimum from ``x0`` by BFGS with the supplied exact gradient."""
    x0 = np.asarray(x0, dtype=np.float64)

    def fun(x):
        v = f(x)
        if not np.isfinite(v):
            raise OptimizerError(f"objective is {v} at {x}")
        return v, np.asarray(grad_f(x), dtype=np.float64)

    res = minimize(fun, x0, jac=True, method="BFGS",
                   options={"gtol": tolerance, "maxiter": max_iters})
    x = np.asarray(res.x, dtype=np.float64)
    val = float(res.fun)
    if not np.isfinite(val):
        raise OptimizerError(f"BFGS ended at non-finite value {val}")
    return x, val


def basinhopping(f: Callable, grad_f: Callable, x0, cfg: OptimizerConfig | None = None,
                 rng: np.random.Generator | None = None) -> tuple[np.ndarray, float]:
    """Basinhopping with BFGS local steps and fixed-temperature Metropolis acceptance.

    Each hop perturbs the currently accepted minimum by a uniform step in
    ``[-step_size, step_size]`` per coordinate and minimizes locally.  The best
    minimum ever found is returned, so the result never gets worse with more
    hops.
    """
    cfg = cfg or OptimizerConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    local = lambda x: bfgs_minimize(f, grad_f, x, tolerance=cfg.tolerance, max_iters=cfg.max_local_iters)
    cur_x, cur_f = local(x0)
    best_x, best_f = cur_x, cur_f
    for _ in range(cfg.hops):
        trial = cur_x + rng.uniform(-cfg.step_size, cfg.step_size, size=cur_x.size)
        new_x, new_f = local(trial)
        if new_f <= cur_f:
            accept = True
        elif cfg.temperature > 0:
            accept = rng.random() < math.exp(-(new_f - cur_f) / cfg.temperature)
        else:
            accept = False
        if accept:
            cur_x, cur_f = new_x, new_f
        if new_f < best_f:
            best_x, best_f = new_x, new_f
    return best_x, best_f


# --------------------------------------------------------------------------
# checkpoint files

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_record(rec: RoundRecord) -> str:
    return (f"p={rec.p}\texp={_fmt(rec.best_expectation)}"
            f"\tbetas={','.join(map(_fmt, rec.best_betas))}"
            f"\tgammas={','.join(map(_fmt, rec.best_gammas))}"
            f"\tevals={rec.evaluations_used}")


def parse_record(line: str) -> RoundRecord:
    try:
        fields = dict(part.split("=", 1) for part in line.rstrip("\n").split("\t"))
        p = int(fields["p"])
        rec = RoundRecord(
            p,
            [float(v) for v in fields["betas"].split(",")],
            [float(v) for v in fields["gammas"].split(",")],
            float(fields["exp"]),
            int(fields.get("evals", 0)),
        )
    except (KeyError, ValueError, DomainError) as exc:
        raise FormatError(f"bad checkpoint line {line!r}: {exc}") from None
    if not (np.all(np.isfinite(rec.angles)) and math.isfinite(rec.best_expectation)):
        raise FormatError(f"non-finite value in checkpoint line {line!r}")
    return rec


def read_checkpoint(path: str | os.PathLike) -> list[RoundRecord]:
    """Records stored in ``path`` (empty if the file does not exist)."""
    if not os.path.exists(path):
        return []
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text and not text.endswith("\n"):
        raise FormatError(f"{path}: truncated final line")
    records = [parse_record(line) for line in text.splitlines() if line.strip()]
    for i, rec in enumerate(records, 1):
        if rec.p != i:
            raise FormatError(f"{path}: expected round {i}, found p={rec.p}")
    return records


def append_checkpoint(path: str | os.PathLike, rec: RoundRecord) -> None:
    """Append one round, replacing the file atomically."""
    path = os.fspath(path)
    old = ""
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            old = fh.read()
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(old + format_record(rec) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# angle finding strategies

def _check_cost(cost: CostTable) -> None:
    if not cost.maximize:
        raise DomainError("angle finding maximizes; negate the objective values to minimize")
    if not cost.same_sign:
        raise DomainError("objective values have mixed signs; add an offset so they share one sign")


def _record(p: int, x: np.ndarray, mixer, cost, evaluations: int, initial_state=None) -> RoundRecord:
    value = expectation(x, mixer, cost, initial_state)
    return RoundRecord(p, x[:p].copy(), x[p:].copy(), value, evaluations)


def seed_candidates(prev: Sequence[RoundRecord]) -> list[np.ndarray]:
    """Starting points for round ``p`` built from the rounds before it.

    Always starts with the zero extension, which reproduces the previous
    expectation exactly; then repeats the last angles; then linearly
    extrapolates the last angle pair when two are available.
    """
    last = prev[-1]
    b, g = last.best_betas, last.best_gammas
    seeds = [
        np.concatenate([b, [0.0], g, [0.0]]),
        np.concatenate([b, b[-1:], g, g[-1:]]),
    ]
    if last.p >= 2:
        seeds.append(np.concatenate([b, [2 * b[-1] - b[-2]], g, [2 * g[-1] - g[-2]]]))
    return seeds


def find_angles(p_target: int, mixer: Mixer, cost: CostTable, cfg: OptimizerConfig | None = None,
                checkpoint: str | os.PathLike | None = None, initial_state=None,
                callback: Callable[[RoundRecord], None] | None = None,
                initial_angles=None) -> list[RoundRecord]:
    """Iteratively optimized angles for every ``p = 1..p_target``.

    Round 1 runs basinhopping from all angles equal to 0.1.  Round ``p``
    evaluates the candidates from :func:`seed_candidates`, runs basinhopping
    from the best of them, and never reports less than the zero-extension
    seed, so expectations are non-decreasing in ``p``.  With ``checkpoint``
    each finished round is appended to that file and rounds already present
    are reused instead of recomputed.

    Passing ``initial_angles`` (length ``2 * p_target``) skips the iteration
    and runs a single basinhopping search at ``p_target`` from that point.
    """
    cfg = cfg or OptimizerConfig()
    if p_target < 1:
        raise DomainError("p_target must be >= 1")
    _check_cost(cost)
    if initial_angles is not None:
        x0 = np.asarray(initial_angles, dtype=np.float64).ravel()
        if x0.size != 2 * p_target:
            raise DomainError(f"initial_angles needs {2 * p_target} entries, got {x0.size}")
        obj = Objective(mixer, cost, initial_state)
        x, _ = basinhopping(obj.value, obj.grad, x0, cfg, np.random.default_rng([cfg.rng_seed, p_target]))
        return [_record(p_target, x, mixer, cost, obj.evaluations, initial_state)]
    records = read_checkpoint(checkpoint) if checkpoint is not None else []
    records = records[:p_target]
    for p in range(len(records) + 1, p_target + 1):
        obj = Objective(mixer, cost, initial_state)
        rng = np.random.default_rng([cfg.rng_seed, p])
        if p == 1:
            x0 = np.full(2, DEFAULT_START)
            floor_x, floor_f = x0, obj.value(x0)
        else:
            seeds = seed_candidates(records)
            vals = [obj.value(s) for s in seeds]
            i = int(np.argmin(vals))
            x0 = seeds[i]
            floor_x, floor_f = seeds[0], vals[0]
        x, fx = basinhopping(obj.value, obj.grad, x0, cfg, rng)
        if fx > floor_f:
            x = floor_x
        rec = _record(p, x, mixer, cost, obj.evaluations, initial_state)
        log.info("p=%d  <C>=%.10g  evals=%d", p, rec.best_expectation, rec.evaluations_used)
        if checkpoint is not None:
            append_checkpoint(checkpoint, rec)
        records.append(rec)
        if callback is not None:
            callback(rec)
    return records


def find_angles_random_restarts(p: int, mixer: Mixer, cost: CostTable,
                                cfg: OptimizerConfig | None = None,
                                initial_state=None) -> RoundRecord:
    """Best BFGS minimum over ``cfg.restarts`` uniform starts in ``[0, 2pi)^{2p}``.

    Restart ``i`` draws its start from its own stream seeded by
    ``(rng_seed, p, i)``, so runs with more restarts extend runs with fewer
    and parallel workers give the same answer as a serial loop.
    """
    cfg = cfg or OptimizerConfig()
    _check_cost(cost)

    def one(i: int):
        obj = Objective(mixer, cost, initial_state)
        x0 = TWO_PI * np.random.default_rng([cfg.rng_seed, p, i]).random(2 * p)
        x, fx = bfgs_minimize(obj.value, obj.grad, x0, tolerance=cfg.tolerance,
                              max_iters=cfg.max_local_iters)
        return x, fx, obj.evaluations

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, range(cfg.restarts)))
    else:
        results = [one(i) for i in range(cfg.restarts)]
    best = min(range(len(results)), key=lambda i: (results[i][1], i))
    evals = sum(r[2] for r in results)
    return _record(p, results[best][0], mixer, cost, evals, initial_state)


def median_angles(records: Sequence) -> AngleSchedule:
    """Coordinate-wise lower median of angle sets folded into ``[0, 2pi)``.

    ``records`` holds :class:`RoundRecord` or :class:`AngleSchedule` objects
    (or flat angle vectors) that all share one ``p``.
    """
    if not records:
        raise DomainError("median of an empty record list")
    flats = []
    for r in records:
        if isinstance(r, RoundRecord):
            flats.append(r.angles)
        elif isinstance(r, AngleSchedule):
            if r.nested:
                raise DomainError("median angles need flat schedules")
            flats.append(r.flat())
        else:
            flats.append(np.asarray(r, dtype=np.float64).ravel())
    if len({f.size for f in flats}) != 1:
        raise DomainError("records have different round counts")
    folded = np.mod(np.vstack(flats), TWO_PI)
    folded[folded >= TWO_PI] -= TWO_PI
    arr = np.sort(folded, axis=0)
    return AngleSchedule.from_flat(arr[(arr.shape[0] - 1) // 2])
