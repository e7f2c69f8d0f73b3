"""Command-line driver: ``qaoasim simulate | optimize | grover-count``.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 capacity
exceeded.  Every option comes from the command line; nothing is read from the
environment.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from functools import partial
from math import comb
from typing import Callable

import numpy as np

from . import __version__
from .angles import (OptimizerConfig, RoundRecord, append_checkpoint, find_angles,
                     find_angles_random_restarts, median_angles, read_checkpoint)
from .basis import BasisSet, dicke_rank_array
from .cost import (CnfFormula, CostTable, Graph, build_cost_table, densest_subgraph_values,
                   erdos_renyi, k_vertex_cover_values, ksat_values, maxcut_values,
                   random_ksat, read_cost_values, read_dimacs, read_edge_list)
from .errors import CapacityError, QAOAError
from .grover_fast import compress_cost, save_histogram
from .mixer import Mixer, mixer_clique, mixer_custom, mixer_grover, mixer_ring, mixer_x
from .sim import AngleSchedule, expectation, simulate

EXIT_USAGE, EXIT_DATA, EXIT_CAPACITY = 2, 3, 4

GRAPH_PROBLEMS = {
    "maxcut": maxcut_values,
    "dks": densest_subgraph_values,
    "kvc": k_vertex_cover_values,
}


class UsageError(Exception):
    pass


@dataclass
class Problem:
    name: str
    n: int
    k: int | None
    f: Callable[[np.ndarray], np.ndarray]   # vectorized over basis labels
    maximize: bool
    instance: Graph | CnfFormula | None = None

    @property
    def basis(self) -> BasisSet:
        return BasisSet(self.n, self.k)

    def table(self, workers: int = 1) -> CostTable:
        return build_cost_table(self.f, self.basis, "max" if self.maximize else "min",
                                vectorized=True, workers=workers)


# --------------------------------------------------------------------------
# argument parsing

def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--n", type=int, help="number of qubits (inferred from the instance file if omitted)")
    g.add_argument("--problem", required=True, choices=["maxcut", "ksat", "dks", "kvc", "table"])
    g.add_argument("--graph", help="edge list file, one 'u v' pair per line")
    g.add_argument("--cnf", help="DIMACS CNF file")
    g.add_argument("--cost-table", help="file of objective values in basis order")
    g.add_argument("--k", type=int, help="Hamming weight of the feasible subspace")
    g.add_argument("--orientation", choices=["max", "min"], default="max",
                   help="whether larger objective values are better (cost tables only)")
    g.add_argument("--random-instance", action="store_true",
                   help="draw a G(n, p) graph or random k-SAT formula (needs --seed)")
    g.add_argument("--seed", type=int, help="random seed for instances and optimizers")
    g.add_argument("--edge-prob", type=float, default=0.5, help="G(n, p) edge probability")
    g.add_argument("--clause-density", type=float, help="clauses per variable for random k-SAT")
    g.add_argument("--clause-width", type=int, default=3)
    g.add_argument("--threads", type=int, default=1, help="worker threads")


def _add_mixer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mixer", help="x:<orders> | clique | ring | grover | custom:<path> "
                                   "(default x:1, or clique when --k is given)")
    p.add_argument("--mixer-cache", help="binary eigendecomposition cache for clique/ring mixers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoasim", description="QAOA statevector simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="evaluate one angle schedule")
    _add_problem_args(s)
    _add_mixer_args(s)
    s.add_argument("--betas", type=_floats, help="comma-separated mixer angles")
    s.add_argument("--gammas", type=_floats, help="comma-separated phase angles")
    s.add_argument("--angles-file", help="checkpoint file; its last round is used")
    s.add_argument("--initial-state", help=".npy or text file of amplitudes in basis order")
    s.add_argument("--out", help="output path (default stdout)")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--probabilities", action="store_true", help="include all probabilities in JSON")

    o = sub.add_parser("optimize", help="find angles for p = 1..rounds")
    _add_problem_args(o)
    _add_mixer_args(o)
    o.add_argument("--rounds", type=int, required=True)
    o.add_argument("--checkpoint", help="per-round angle file; resumed if present")
    o.add_argument("--method", choices=["iterative", "restarts", "median"], default="iterative")
    o.add_argument("--hops", type=int, default=OptimizerConfig.hops)
    o.add_argument("--step-size", type=float, default=OptimizerConfig.step_size)
    o.add_argument("--temperature", type=float, default=OptimizerConfig.temperature)
    o.add_argument("--restarts", type=int, default=OptimizerConfig.restarts)
    o.add_argument("--instances", type=int, default=5,
                   help="training instances for --method median")
    o.add_argument("--out", help="per-round CSV path (default stdout)")

    c = sub.add_parser("grover-count", help="count the objective value histogram")
    _add_problem_args(c)
    c.add_argument("--out", required=True, help="histogram file")
    return parser


# --------------------------------------------------------------------------
# problem and mixer construction

def _random_graph(args, n: int, seed: int) -> Graph:
    return erdos_renyi(n, args.edge_prob, seed=seed)


def _random_cnf(args, n: int, seed: int) -> CnfFormula:
    return random_ksat(n, args.clause_density, args.clause_width, seed=seed)


def _check_k(n: int, k: int | None) -> None:
    if k is not None and not 0 <= k <= n:
        raise UsageError(f"--k {k} outside [0, {n}]")


def load_problem(args, seed: int | None = None) -> Problem:
    """Instance described by the problem flags; ``seed`` overrides ``--seed``."""
    name, k = args.problem, args.k
    seed = args.seed if seed is None else seed
    if args.random_instance and seed is None:
        raise UsageError("--random-instance requires --seed")
    if name in ("dks", "kvc") and k is None:
        raise UsageError(f"--problem {name} requires --k")
    if name in GRAPH_PROBLEMS:
        if args.random_instance:
            if args.n is None:
                raise UsageError("--random-instance requires --n")
            graph = _random_graph(args, args.n, seed)
        elif args.graph:
            graph = read_edge_list(args.graph, args.n)
        else:
            raise UsageError(f"--problem {name} needs --graph or --random-instance")
        _check_k(graph.n_vertices, k)
        return Problem(name, graph.n_vertices, k, partial(GRAPH_PROBLEMS[name], graph), True, graph)
    if name == "ksat":
        if args.random_instance:
            if args.n is None or args.clause_density is None:
                raise UsageError("random k-SAT requires --n and --clause-density")
            formula = _random_cnf(args, args.n, seed)
        elif args.cnf:
            formula = read_dimacs(args.cnf)
            if args.n is not None and args.n != formula.n_vars:
                raise UsageError(f"--n {args.n} but the formula has {formula.n_vars} variables")
        else:
            raise UsageError("--problem ksat needs --cnf or --random-instance")
        _check_k(formula.n_vars, k)
        return Problem(name, formula.n_vars, k, partial(ksat_values, formula), True, formula)
    # explicit table of values in basis order
    if not args.cost_table:
        raise UsageError("--problem table needs --cost-table")
    if args.random_instance:
        raise UsageError("--random-instance does not apply to --problem table")
    values = read_cost_values(args.cost_table)
    n = args.n
    if n is None:
        if k is not None:
            raise UsageError("--cost-table with --k needs --n")
        n = int(values.size).bit_length() - 1
    _check_k(n, k)
    expected = (1 << n) if k is None else comb(n, k)
    if values.size != expected or n < 1:
        raise UsageError(f"cost table has {values.size} values, basis has {expected}")
    if k is None:
        f = lambda xs: values[np.asarray(xs, dtype=np.int64)]
    else:
        f = lambda xs: values[dicke_rank_array(np.asarray(xs, dtype=np.int64), n, k)]
    return Problem(name, n, k, f, args.orientation == "max")


def _load_matrix(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, dtype=np.complex128, ndmin=2)


def build_mixer(args, problem: Problem) -> Mixer:
    choice = args.mixer or ("x:1" if problem.k is None else "clique")
    n, k = problem.n, problem.k
    kind, _, rest = choice.partition(":")
    if kind == "x":
        if k is not None:
            raise UsageError("x mixers act on the full space; drop --k or pick clique/ring/grover")
        try:
            orders = [int(t) for t in (rest or "1").split(",")]
        except ValueError:
            raise UsageError(f"bad mixer orders in {choice!r}") from None
        if not all(1 <= r <= n for r in orders):
            raise UsageError(f"mixer orders must lie in [1, {n}]")
        return mixer_x(orders, n)
    if kind in ("clique", "ring"):
        if k is None:
            raise UsageError(f"--mixer {kind} requires --k")
        if not 1 <= k <= n - 1:
            raise UsageError(f"--mixer {kind} needs 1 <= k <= n-1")
        build = mixer_clique if kind == "clique" else mixer_ring
        return build(n, k, file=args.mixer_cache)
    if kind == "grover":
        return mixer_grover(problem.basis)
    if kind == "custom":
        if not rest:
            raise UsageError("--mixer custom:<path> needs a matrix file")
        return mixer_custom(_load_matrix(rest), problem.basis)
    raise UsageError(f"unknown mixer {choice!r}")


def _load_vector(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, dtype=np.complex128, ndmin=1)


def _angles(args) -> AngleSchedule:
    if args.angles_file:
        if args.betas or args.gammas:
            raise UsageError("give either --angles-file or --betas/--gammas")
        records = read_checkpoint(args.angles_file)
        if not records:
            raise UsageError(f"{args.angles_file} holds no rounds")
        return records[-1].schedule
    if args.betas is None or args.gammas is None:
        raise UsageError("simulate needs --betas and --gammas (or --angles-file)")
    if len(args.betas) != len(args.gammas) or not args.betas:
        raise UsageError("--betas and --gammas must have the same nonzero length")
    return AngleSchedule(args.betas, args.gammas)


def _ratio(table: CostTable, value: float) -> float | None:
    try:
        return table.approximation_ratio(value)
    except QAOAError:
        return None


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(args, argv: list[str]) -> int:
    problem = load_problem(args)
    mixer = build_mixer(args, problem)
    schedule = _angles(args)
    table = problem.table(args.threads)
    initial = _load_vector(args.initial_state) if args.initial_state else None
    res = simulate(schedule, mixer, table, initial)
    probs = res.probabilities()
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "bitstring", "probability"])
        for i, (x, pr) in enumerate(zip(table.basis.states, probs)):
            w.writerow([i, format(int(x), f"0{problem.n}b"), repr(float(pr))])
        _write(buf.getvalue(), args.out)
        return 0
    out = {
        "provenance": {"version": __version__, "argv": argv, "flags": vars(args)},
        "problem": {"name": problem.name, "n": problem.n, "k": problem.k,
                    "best_value": table.best_value, "maximize": table.maximize},
        "mixer": mixer.label,
        "angles": {"betas": schedule.betas.tolist(), "gammas": schedule.gammas.tolist()},
        "exp_value": res.exp_value(),
        "ground_state_probability": res.ground_state_probability(),
    }
    ratio = _ratio(table, out["exp_value"])
    if ratio is not None:
        out["approx_ratio"] = ratio
    if args.probabilities:
        out["probabilities"] = probs.tolist()
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def _median_records(args, problem: Problem, mixer: Mixer, table: CostTable,
                    cfg: OptimizerConfig, done: list[RoundRecord]) -> list[RoundRecord]:
    """Median of iterative angles over training instances, applied to ``problem``."""
    if not args.random_instance:
        raise UsageError("--method median draws training instances; it needs --random-instance")
    if args.instances < 1:
        raise UsageError("--instances must be >= 1")
    training = []
    for i in range(1, args.instances + 1):
        other = load_problem(args, seed=args.seed + i)
        training.append(find_angles(args.rounds, mixer, other.table(args.threads), cfg))
    records = list(done)
    for p in range(len(done) + 1, args.rounds + 1):
        sched = median_angles([recs[p - 1] for recs in training])
        value = expectation(sched, mixer, table)
        rec = RoundRecord(p, sched.betas, sched.gammas, value, 0)
        if args.checkpoint:
            append_checkpoint(args.checkpoint, rec)
        records.append(rec)
    return records


def cmd_optimize(args, argv: list[str]) -> int:
    if args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    problem = load_problem(args)
    mixer = build_mixer(args, problem)
    table = problem.table(args.threads)
    cfg = OptimizerConfig(hops=args.hops, step_size=args.step_size, temperature=args.temperature,
                          restarts=args.restarts, rng_seed=args.seed or 0, workers=args.threads)
    if args.method == "iterative":
        records = find_angles(args.rounds, mixer, table, cfg, checkpoint=args.checkpoint)
    else:
        done = read_checkpoint(args.checkpoint)[:args.rounds] if args.checkpoint else []
        if args.method == "restarts":
            records = list(done)
            for p in range(len(done) + 1, args.rounds + 1):
                rec = find_angles_random_restarts(p, mixer, table, cfg)
                if args.checkpoint:
                    append_checkpoint(args.checkpoint, rec)
                records.append(rec)
        else:
            records = _median_records(args, problem, mixer, table, cfg, done)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "exp_value", "approx_ratio"])
    for rec in records:
        ratio = _ratio(table, rec.best_expectation)
        w.writerow([rec.p, repr(rec.best_expectation), "" if ratio is None else repr(ratio)])
    _write(buf.getvalue(), args.out)
    return 0


def cmd_grover_count(args, argv: list[str]) -> int:
    problem = load_problem(args)
    cost = compress_cost(problem.f, problem.n, problem.k, workers=args.threads,
                         maximize=problem.maximize)
    save_histogram(cost, args.out)
    print(f"m={cost.m} total={cost.total}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "grover-count": cmd_grover_count}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qaoasim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, MemoryError) as exc:
        print(f"qaoasim: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (QAOAError, ValueError, OSError) as exc:
        print(f"qaoasim: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
