from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qaoasim.basis import (BasisSet, dicke_rank, dicke_rank_array, dicke_states, dicke_unrank,
                           dicke_unrank_array, gosper_next, states)
from qaoasim.errors import CapacityError, DomainError


def test_states_order():
    assert list(states(2)) == [0, 1, 2, 3]
    assert list(states(1)) == [0, 1]
    assert sum(1 for _ in states(20)) == 2 ** 20


def test_states_expose_bits():
    x = list(states(3))[5]
    assert x == 5
    assert list(x.bits) == [1, 0, 1]
    assert x[0] == 1 and x[1] == 0 and len(x) == 3


def test_states_range():
    with pytest.raises(CapacityError):
        next(states(0))
    with pytest.raises(CapacityError):
        next(states(63))


def test_dicke_examples():
    assert list(dicke_states(4, 2)) == [3, 5, 6, 9, 10, 12]
    assert list(dicke_states(3, 0)) == [0]
    assert sum(1 for _ in dicke_states(12, 6)) == 924
    with pytest.raises(DomainError):
        next(dicke_states(3, 4))


def test_gosper_examples():
    assert gosper_next(0b0011) == 0b0101
    assert gosper_next(0b0101) == 0b0110
    assert gosper_next(0b0110) == 0b1001
    with pytest.raises(DomainError):
        gosper_next(0)


@given(st.integers(min_value=1, max_value=2 ** 40))
def test_gosper_is_next_same_popcount(x):
    y = gosper_next(x)
    assert y > x and y.bit_count() == x.bit_count()
    # nothing in between has the same popcount (checked on a bounded window)
    if y - x < 4096:
        assert all(z.bit_count() != x.bit_count() for z in range(x + 1, y))


@pytest.mark.parametrize("n", range(1, 17))
def test_gosper_chain_matches_filter(n):
    everything = np.arange(2 ** n)
    pop = np.bitwise_count(everything)
    for k in range(n + 1):
        chain = [int(x) for x in dicke_states(n, k)]
        assert len(chain) == comb(n, k)
        assert chain == sorted(chain) and len(set(chain)) == len(chain)
        assert chain == everything[pop == k].tolist()


def test_rank_examples():
    assert dicke_rank(0b0101, 4, 2) == 1
    assert dicke_unrank(0, 4, 2) == 0b0011
    assert dicke_rank(dicke_unrank(500, 12, 6), 12, 6) == 500
    assert dicke_rank([1, 0, 1, 0], 4, 2) == 1
    with pytest.raises(DomainError):
        dicke_rank(0b0111, 4, 2)
    with pytest.raises(DomainError):
        dicke_unrank(6, 4, 2)


@pytest.mark.parametrize("n", range(1, 13))
def test_rank_roundtrip_scalar_exhaustive(n):
    for k in range(n + 1):
        for i, x in enumerate(dicke_states(n, k)):
            assert dicke_unrank(i, n, k) == x
            assert dicke_rank(x, n, k) == i


@pytest.mark.parametrize("n", [13, 14, 15, 16])
def test_rank_roundtrip_vectorized_exhaustive(n):
    for k in range(n + 1):
        idx = np.arange(comb(n, k))
        words = dicke_unrank_array(idx, n, k)
        assert words.tolist() == [int(x) for x in dicke_states(n, k)]
        assert np.array_equal(dicke_rank_array(words, n, k), idx)


def test_basis_sets():
    full = BasisSet(3)
    assert full.dim == 8 and full.is_full
    assert full.states.tolist() == list(range(8))
    d = BasisSet.dicke(4, 2)
    assert d.dim == 6 and d.states.tolist() == [3, 5, 6, 9, 10, 12]
    assert d.rank(9) == 3 and d.unrank(3) == 9
    assert d == BasisSet(4, 2) and d != full
    assert d.bit_matrix()[1].tolist() == [1, 0, 1, 0]


def test_basis_capacity():
    with pytest.raises(CapacityError):
        BasisSet(31)
    BasisSet(40, 2)  # small Dicke subspace of a large register is fine


def test_explicit_basis():
    b = BasisSet.from_states(3, [6, 1, 4])
    assert b.states.tolist() == [1, 4, 6]
    assert b.rank(4) == 1 and b.unrank(2) == 6
    with pytest.raises(DomainError):
        b.rank(2)
    with pytest.raises(DomainError):
        BasisSet.from_states(3, [1, 1])
    with pytest.raises(DomainError):
        BasisSet.from_states(3, [9])
