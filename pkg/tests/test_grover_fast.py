from functools import partial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qaoasim.basis import BasisSet
from qaoasim.cost import (CostTable, Graph, build_cost_table, constant, densest_subgraph_values,
                          erdos_renyi, maxcut_values)
from qaoasim.errors import CapacityError, DomainError, FormatError
from qaoasim.grover_fast import (CompressedCost, class_probabilities, compress_cost,
                                 exp_value_compressed, ground_state_probability_compressed,
                                 initial_compressed, load_histogram, save_histogram,
                                 simulate_compressed)
from qaoasim.mixer import mixer_grover
from qaoasim.sim import simulate

K3 = Graph(3, [(0, 1), (1, 2), (0, 2)])


def test_k3_histogram():
    c = compress_cost(partial(maxcut_values, K3), 3)
    assert c.values.tolist() == [0, 2] and c.degeneracies.tolist() == [2, 6]
    assert c.total == 8 and c.m == 2


def test_constant_histogram():
    c = compress_cost(constant(2.5), 10)
    assert c.values.tolist() == [2.5] and c.degeneracies.tolist() == [1024]
    d = compress_cost(constant(1.0), 10, 4)
    assert d.degeneracies.tolist() == [210]


@pytest.mark.parametrize("k", [None, 5])
def test_worker_count_does_not_matter(k):
    f = partial(maxcut_values, erdos_renyi(12, 0.5, seed=1))
    one = compress_cost(f, 12, k, workers=1)
    eight = compress_cost(f, 12, k, workers=8)
    assert np.array_equal(one.values, eight.values)
    assert np.array_equal(one.degeneracies, eight.degeneracies)


def test_histogram_matches_enumeration():
    g = erdos_renyi(10, 0.5, seed=2)
    for k in (None, 4):
        b = BasisSet(10, k)
        table = build_cost_table(partial(densest_subgraph_values, g), b, vectorized=True)
        ref_v, ref_g = np.unique(table.values, return_counts=True)
        c = compress_cost(partial(densest_subgraph_values, g), 10, k, workers=3)
        assert np.array_equal(c.values, ref_v) and np.array_equal(c.degeneracies, ref_g)
        f = CompressedCost.from_table(table)
        assert np.array_equal(f.values, ref_v) and f.k == k


def test_float_values_are_binned():
    vals = np.array([0.1 + 0.2, 0.3, 1.0, 1.0 + 5e-13, 2.0, 3.0, 4.0, 5.0])
    c = compress_cost(lambda xs: vals[xs], 3)
    assert c.m == 6 and c.degeneracies.tolist() == [2, 2, 1, 1, 1, 1]
    assert c.values[1] == 1.0


def test_compress_errors():
    with pytest.raises(CapacityError):
        compress_cost(constant(0.0), 31)
    with pytest.raises(DomainError):
        compress_cost(constant(0.0), 4, 5)
    with pytest.raises(DomainError):
        compress_cost(constant(0.0), 4, workers=0)
    with pytest.raises(DomainError):
        compress_cost(lambda xs: np.where(xs == 3, np.nan, 0.0), 4)


def test_compressed_cost_validation():
    with pytest.raises(DomainError):
        CompressedCost(np.array([1.0, 0.0]), np.array([2, 2]), 2)
    with pytest.raises(DomainError):
        CompressedCost(np.array([0.0, 1.0]), np.array([0, 4]), 2)
    with pytest.raises(DomainError):
        CompressedCost(np.array([0.0, 1.0]), np.array([1, 2]), 2)


def test_uniform_k3():
    c = compress_cost(partial(maxcut_values, K3), 3)
    st0 = initial_compressed(c)
    assert abs(exp_value_compressed(st0) - 1.5) <= 1e-15
    assert abs(ground_state_probability_compressed(st0) - 0.75) <= 1e-15


def test_single_value_expectation():
    c = compress_cost(constant(4.0), 6)
    rng = np.random.default_rng(0)
    for _ in range(5):
        st_ = simulate_compressed(rng.uniform(-5, 5, 8), c)
        assert abs(exp_value_compressed(st_) - 4.0) <= 1e-12
        # constant cost: only a global phase relative to uniform
        ratio = st_.amps / (1 / 8)
        assert abs(abs(ratio[0]) - 1) <= 1e-12


def test_beta_zero_keeps_magnitudes():
    c = compress_cost(partial(maxcut_values, erdos_renyi(8, 0.5, seed=3)), 8)
    st_ = simulate_compressed([0, 0, 0, 0.4, 1.3, -2.0], c)
    assert np.max(np.abs(np.abs(st_.amps) - 1 / 16)) <= 1e-15


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_norm_over_20_rounds(seed):
    rng = np.random.default_rng(seed)
    c = compress_cost(partial(maxcut_values, erdos_renyi(9, 0.5, seed=seed)), 9)
    st_ = simulate_compressed(rng.uniform(-np.pi, np.pi, 40), c)
    assert abs(st_.norm_sq - 1) <= 1e-10
    assert abs(class_probabilities(st_).sum() - 1) <= 1e-10


@pytest.mark.parametrize("n,k", [(4, None), (7, None), (10, None), (12, None), (8, 3), (12, 6)])
def test_matches_full_simulation(n, k):
    rng = np.random.default_rng(n * 31 + (k or 0))
    g = erdos_renyi(n, 0.5, seed=n)
    b = BasisSet(n, k)
    table = build_cost_table(partial(maxcut_values, g), b, vectorized=True)
    c = compress_cost(partial(maxcut_values, g), n, k)
    m = mixer_grover(b)
    for _ in range(3):
        angles = rng.uniform(-np.pi, np.pi, 2 * rng.integers(1, 6))
        full = simulate(angles, m, table)
        comp = simulate_compressed(angles, c)
        assert abs(full.exp_value() - exp_value_compressed(comp)) <= 1e-10
        assert abs(full.ground_state_probability() - ground_state_probability_compressed(comp)) <= 1e-10
        idx = np.searchsorted(c.values, table.values)
        assert np.max(np.abs(full.amplitudes() - comp.amps[idx])) <= 1e-10


def test_nested_angles_rejected():
    from qaoasim.sim import AngleSchedule
    c = compress_cost(constant(1.0), 3)
    with pytest.raises(DomainError):
        simulate_compressed(AngleSchedule([[0.1, 0.2]], [0.3]), c)


def test_minimize_orientation():
    c = compress_cost(partial(maxcut_values, K3), 3, maximize=False)
    assert abs(ground_state_probability_compressed(initial_compressed(c)) - 0.25) <= 1e-15


def test_histogram_file(tmp_path):
    path = tmp_path / "k3.hist"
    c = compress_cost(partial(maxcut_values, K3), 3)
    save_histogram(c, path)
    assert path.read_text() == "# n=3 k=full total=8\n0\t2\n2\t6\n"
    back = load_histogram(path)
    assert np.array_equal(back.values, c.values) and np.array_equal(back.degeneracies, c.degeneracies)
    d = CompressedCost(np.array([-0.5, 1 / 3]), np.array([4, 2]), 4, 2)
    save_histogram(d, tmp_path / "d.hist")
    e = load_histogram(tmp_path / "d.hist")
    assert e.k == 2 and np.array_equal(e.values, d.values)


def test_histogram_file_errors(tmp_path):
    path = tmp_path / "bad.hist"
    path.write_text("n=3\n0\t8\n")
    with pytest.raises(FormatError):
        load_histogram(path)
    path.write_text("# n=3 k=full total=8\n0\t2\n2\t5\n")
    with pytest.raises(FormatError):
        load_histogram(path)
    path.write_text("# n=3 k=full total=8\n0 2\n")
    with pytest.raises(FormatError):
        load_histogram(path)
