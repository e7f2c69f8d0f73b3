import itertools

import numpy as np
import pytest

from qaoasim.basis import BasisSet
from qaoasim.cost import (CnfFormula, Graph, build_cost_table, constant, densest_subgraph,
                          densest_subgraph_values, erdos_renyi, k_vertex_cover,
                          k_vertex_cover_values, ksat, ksat_values, maxcut, maxcut_values,
                          random_ksat, read_cost_values, read_dimacs, read_edge_list,
                          threshold_transform, write_dimacs, write_edge_list)
from qaoasim.errors import DataError, DomainError, FormatError

K3 = Graph(3, ((0, 1), (1, 2), (0, 2)))
PATH3 = Graph(3, ((0, 1), (1, 2)))


def test_maxcut_examples():
    assert maxcut(K3, [0, 0, 0]) == 0
    assert maxcut(K3, 0b001) == 2
    assert maxcut(PATH3, [0, 1, 0]) == 2
    with pytest.raises(DomainError):
        maxcut(K3, [0, 1])
    with pytest.raises(DomainError):
        maxcut(K3, 8)


def test_ksat_examples():
    f = CnfFormula(2, ((1, 2),))
    assert ksat(f, 0) == 0
    assert ksat(f, 1) == 1  # variable 1 is bit 0
    g = CnfFormula(1, ((1,), (-1,)))
    assert ksat(g, 0) == 1 and ksat(g, 1) == 1
    with pytest.raises(DomainError):
        ksat(f, [1, 0, 0])


def test_constrained_objectives():
    assert densest_subgraph(K3, [1, 1, 0]) == 1
    assert densest_subgraph(K3, 0b111) == 3
    assert densest_subgraph(Graph(4), 0b0110) == 0
    assert k_vertex_cover(K3, [0, 0, 1]) == 2
    assert k_vertex_cover(K3, [0, 1, 1]) == 3
    star = Graph(5, tuple((0, i) for i in range(1, 5)))
    assert k_vertex_cover(star, 0b00001) == 4


def test_formula_and_graph_validation():
    with pytest.raises(DomainError):
        CnfFormula(2, ((),))
    with pytest.raises(DomainError):
        CnfFormula(2, ((1, -1),))
    with pytest.raises(DomainError):
        Graph(3, ((0, 0),))
    with pytest.raises(DomainError):
        Graph(3, ((0, 1), (1, 0)))


def test_maxcut_table_k3():
    # exhaustive: the triangle's 6 nontrivial bipartitions cut 2 edges each
    oracle = [sum((x >> u & 1) != (x >> v & 1) for u, v in K3.edges) for x in range(8)]
    assert oracle == [0, 2, 2, 2, 2, 2, 2, 0]
    t = build_cost_table(lambda x: maxcut(K3, x), BasisSet(3))
    assert t.values.tolist() == oracle
    assert t.best_value == 2
    v = build_cost_table(lambda xs: maxcut_values(K3, xs), BasisSet(3), vectorized=True)
    assert np.array_equal(t.values, v.values)


def test_table_examples():
    t = build_cost_table(lambda x: densest_subgraph(K3, x), BasisSet(3, 2))
    assert t.values.tolist() == [1, 1, 1]
    c = build_cost_table(lambda x: 5.0, BasisSet(4))
    assert np.all(c.values == 5) and c.best_value == 5
    m = build_cost_table(lambda x: float(x), BasisSet(3), "min")
    assert m.best_value == 0 and m.orientation == "min"


def test_scalar_cost_receives_bits():
    t = build_cost_table(lambda x: x[0] + 2 * x[2], BasisSet(3))
    assert t.values.tolist() == [0, 1, 0, 1, 2, 3, 2, 3]


def test_non_finite_is_reported():
    with pytest.raises(DataError, match="101"):
        build_cost_table(lambda x: np.nan if x == 5 else 0.0, BasisSet(3))


def test_threshold_transform():
    t = build_cost_table(lambda x: maxcut(K3, x), BasisSet(3))
    assert threshold_transform(t, 1, strict=True).values.tolist() == [0, 1, 1, 1, 1, 1, 1, 0]
    assert not threshold_transform(t, np.inf).values.any()
    assert threshold_transform(t, -1, strict=False).values.all()
    assert threshold_transform(t, 2, strict=False).values.tolist() == [0, 1, 1, 1, 1, 1, 1, 0]


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_workers_do_not_change_table(workers):
    g = erdos_renyi(10, 0.5, seed=7)
    b = BasisSet(10)
    one = build_cost_table(lambda x: maxcut(g, x), b)
    many = build_cost_table(lambda x: maxcut(g, x), b, workers=workers)
    vec = build_cost_table(lambda xs: maxcut_values(g, xs), b, vectorized=True, workers=workers)
    assert np.array_equal(one.values, many.values)
    assert np.array_equal(one.values, vec.values)


@pytest.mark.parametrize("n", [4, 8, 12])
def test_graph_objective_properties(n):
    g = erdos_renyi(n, 0.5, seed=n)
    xs = np.arange(2 ** n)
    cut = maxcut_values(g, xs)
    assert np.array_equal(cut, maxcut_values(g, xs ^ (2 ** n - 1)))
    cover = k_vertex_cover_values(g, xs)
    uncovered = np.zeros(xs.size)
    for u, v in g.edges:
        uncovered += ((xs >> u) & 1 == 0) & ((xs >> v) & 1 == 0)
    assert np.array_equal(cover + uncovered, np.full(xs.size, g.n_edges))
    dense = densest_subgraph_values(g, xs)
    k = np.bitwise_count(xs)
    assert np.all(dense <= k * (k - 1) / 2)


def test_vectorized_matches_scalar():
    g = erdos_renyi(7, 0.5, seed=1)
    f = random_ksat(7, 4, seed=2)
    xs = np.arange(2 ** 7)
    for scalar, vec, inst in [(maxcut, maxcut_values, g), (densest_subgraph, densest_subgraph_values, g),
                              (k_vertex_cover, k_vertex_cover_values, g), (ksat, ksat_values, f)]:
        assert vec(inst, xs).tolist() == [scalar(inst, int(x)) for x in xs]


def test_approximation_ratio_rules():
    t = build_cost_table(lambda x: maxcut(K3, x), BasisSet(3))
    assert t.approximation_ratio(1.5) == 0.75
    mixed = build_cost_table(lambda x: float(x) - 3, BasisSet(3))
    assert not mixed.same_sign
    with pytest.raises(DomainError, match="offset"):
        mixed.approximation_ratio(0.0)


def test_generators_are_seeded():
    assert erdos_renyi(12, 0.5, seed=3) == erdos_renyi(12, 0.5, seed=3)
    assert erdos_renyi(12, 0.5, seed=3) != erdos_renyi(12, 0.5, seed=4)
    f = random_ksat(12, 6, seed=1)
    assert len(f.clauses) == 72
    assert all(len(c) == 3 and len({abs(l) for l in c}) == 3 for c in f.clauses)
    assert f == random_ksat(12, 6, seed=1)


def test_edge_list_roundtrip(tmp_path):
    g = erdos_renyi(9, 0.5, seed=0)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    assert read_edge_list(path, 9) == g
    (tmp_path / "bad.txt").write_text("0 1 2\n")
    with pytest.raises(FormatError):
        read_edge_list(tmp_path / "bad.txt")
    (tmp_path / "c.txt").write_text("# comment\n0 1  # trailing\n\n2 1\n")
    assert read_edge_list(tmp_path / "c.txt").edges == ((0, 1), (1, 2))


def test_dimacs_roundtrip(tmp_path):
    f = random_ksat(6, 3, seed=5)
    path = tmp_path / "f.cnf"
    write_dimacs(f, path)
    assert read_dimacs(path) == f
    (tmp_path / "m.cnf").write_text("c hi\np cnf 3 2\n1 -2\n 3 0 -1 0\n")
    assert read_dimacs(tmp_path / "m.cnf").clauses == ((1, -2, 3), (-1,))
    (tmp_path / "bad.cnf").write_text("p cnf 3 2\n1 2 0\n")
    with pytest.raises(FormatError):
        read_dimacs(tmp_path / "bad.cnf")


def test_cost_value_file(tmp_path):
    (tmp_path / "t.txt").write_text("# values\n1 2\n3.5\n")
    assert read_cost_values(tmp_path / "t.txt").tolist() == [1, 2, 3.5]
    assert constant(2.5)(np.arange(3)).tolist() == [2.5] * 3


def test_dicke_table_alignment():
    g = erdos_renyi(6, 0.5, seed=2)
    b = BasisSet(6, 3)
    t = build_cost_table(lambda x: densest_subgraph(g, x), b)
    for i, x in enumerate(itertools.islice(b.states, None)):
        assert t.values[i] == densest_subgraph(g, int(x))
