import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jchsim.errors import ConfigError
from jchsim.lattice import chain, edge_coloring, from_edges, kagome, make_lattice, square


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=30))
def test_open_chain_has_n_minus_one_edges(n):
    assert len(chain(n).edges) == n - 1


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=3, max_value=8))
def test_periodic_square_has_two_l_squared_edges(size):
    assert len(square(size, boundary="periodic").edges) == 2 * size * size


def test_kagome_is_four_coordinated():
    lat = kagome(3)
    assert lat.num_sites == 27
    assert set(lat.degrees().tolist()) == {4}


def test_edges_are_normalized_and_loop_free():
    lat = from_edges(3, [(1, 0), (2, 1), (0, 1)])
    assert lat.edges == ((0, 1), (1, 2))
    assert lat.has_edge(1, 0) and lat.has_edge(0, 1)
    with pytest.raises(ConfigError):
        from_edges(3, [(1, 1)])
    with pytest.raises(ConfigError):
        from_edges(2, [(0, 5)])


def test_make_lattice_dispatch_and_errors():
    assert make_lattice("chain", 4).num_sites == 4
    assert make_lattice("square", [2, 3]).num_sites == 6
    assert make_lattice("explicit", 3, edges=[(0, 2)]).edges == ((0, 2),)
    with pytest.raises(ConfigError):
        make_lattice("explicit", 3)
    with pytest.raises(ConfigError):
        make_lattice("hexagonal", 3)
    with pytest.raises(ConfigError):
        chain(3, boundary="twisted")


def test_square_bond_directions():
    lat = square(3)
    assert lat.bond_direction(0, 1) == "x"
    assert lat.bond_direction(0, 3) == "y"
    with pytest.raises(ConfigError):
        lat.bond_direction(0, 4)
    with pytest.raises(ConfigError):
        chain(3).bond_direction(0, 1)


@pytest.mark.parametrize("lat", [chain(6), square(4), square(4, boundary="periodic"), kagome(2)])
def test_edge_coloring_is_proper(lat):
    colors = edge_coloring(lat)
    assert set(colors) == set(lat.edges)
    for site in range(lat.num_sites):
        incident = [c for e, c in colors.items() if site in e]
        assert len(incident) == len(set(incident))
