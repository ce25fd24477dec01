import pytest
from hypothesis import given, strategies as st

from netac.graph import InteractionGraph, kappa_neighborhood


def test_line_neighbourhoods():
    g = InteractionGraph.line(5)
    assert g.neighbors[0] == (0, 1)
    assert g.neighbors[2] == (1, 2, 3)
    assert kappa_neighborhood(g, 0, 0) == (0,)
    assert kappa_neighborhood(g, 0, 2) == (0, 1, 2)
    assert g.kappa_neighborhood(2, 10) == (0, 1, 2, 3, 4)
    assert g.complement(0, 1) == (2, 3, 4)
    assert g.diameter() == 4


def test_grid_distances():
    g = InteractionGraph.grid(3, 3)
    assert g.distances_from(0) == [0, 1, 2, 1, 2, 3, 2, 3, 4]
    assert g.kappa_neighborhood(4, 1) == (1, 3, 4, 5, 7)


def test_from_neighbor_sets_validation():
    g = InteractionGraph.from_neighbor_sets([{0, 1}, {0, 1}])
    assert g.edges == [(0, 1)]
    with pytest.raises(ValueError):
        InteractionGraph.from_neighbor_sets([{0, 1}, {1}])
    with pytest.raises(ValueError):
        InteractionGraph.from_neighbor_sets([{1}, {0, 1}])


def test_out_of_range_agent():
    g = InteractionGraph.line(3)
    with pytest.raises(IndexError):
        g.distances_from(3)


def test_disconnected_components():
    g = InteractionGraph(4, [(0, 1)])
    assert g.kappa_neighborhood(0, 5) == (0, 1)
    assert g.kappa_neighborhood(3, 5) == (3,)


@given(st.integers(1, 8), st.integers(0, 8))
def test_neighbourhoods_nested(n, kappa):
    g = InteractionGraph.line(n)
    for i in range(n):
        small = set(g.kappa_neighborhood(i, kappa))
        big = set(g.kappa_neighborhood(i, kappa + 1))
        assert i in small and small <= big
        assert set(g.complement(i, kappa)) == set(range(n)) - small


def test_hand_examples():
    g = InteractionGraph.line(5)
    assert kappa_neighborhood(g, 2, 1) == (1, 2, 3)
    for i in range(5):
        assert kappa_neighborhood(g, i, 0) == (i,)
        assert kappa_neighborhood(g, i, g.diameter()) == tuple(range(5))
    six = InteractionGraph.line(6)
    assert [six.neighbors[i] for i in (0, 3, 5)] == [(0, 1), (2, 3, 4), (4, 5)]
