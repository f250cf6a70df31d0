from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from folnerkit.checks.matching import hall_deficiency
from folnerkit.groups import Entourage, FiniteWindow
from folnerkit.matching import (
    BipartiteInstance,
    build_graph,
    matching_number,
    max_matching,
    perfect_matching,
    verify_pairing,
)
from strategies import CIRCLE, F2, STANDARD, THOROUGH, Z2


@st.composite
def instances(draw, max_side: int = 8):
    n_left = draw(st.integers(min_value=0, max_value=max_side))
    n_right = draw(st.integers(min_value=0, max_value=max_side))
    cells = [(i, j) for i in range(n_left) for j in range(n_right)]
    edges = draw(st.lists(st.sampled_from(cells), unique=True)) if cells else []
    return BipartiteInstance.from_edges(n_left, n_right, edges)


@THOROUGH
@given(instances())
def test_matching_is_maximum_with_konig_witness(instance):
    result = max_matching(instance)
    assert len(set(result.pairing.values())) == result.mu == len(result.pairing)
    assert all(j in instance.adjacency[i] for i, j in result.pairing.items())
    assert result.mu == instance.n_left - hall_deficiency(instance)
    assert result.deficiency == instance.n_left - result.mu
    assert list(result.witness_neighbours) == instance.neighbourhood(result.witness)


@STANDARD
@given(instances())
def test_transpose_has_same_matching_number(instance):
    assert max_matching(instance.transpose()).mu == max_matching(instance).mu


def test_perfect_matching_or_hall_violator():
    star = BipartiteInstance.from_edges(3, 3, [(0, 0), (1, 0), (2, 0), (2, 1)])
    found = perfect_matching(star)
    assert not found.exists
    assert found.violator == (0, 1)
    ladder = BipartiteInstance.from_edges(2, 2, [(0, 0), (0, 1), (1, 0)])
    assert perfect_matching(ladder).pairing == {0: 1, 1: 0}


def test_edges_outside_the_instance_are_refused():
    with pytest.raises(ValueError):
        BipartiteInstance.from_edges(1, 1, [(0, 1)])


def test_translate_graph_on_lattice():
    F = Z2.box(3)
    gF = FiniteWindow(Z2.mul(Z2.parse("1,0"), x) for x in F)
    assert matching_number(F, gF, Entourage(Z2.metric, 0)) == 6
    assert matching_number(F, gF, Entourage(Z2.metric, 1)) == 9


def test_edge_direction_follows_right_quotient():
    E = FiniteWindow([F2.parse("a")])
    F = FiniteWindow(F2.parse_many(["ab", "ba"]))
    instance = build_graph(E, F, Entourage(F2.metric, 1))
    assert instance.adjacency == ((1,),)


def test_circle_graph_and_stored_pairing():
    F = CIRCLE.grid(4)
    shifted = FiniteWindow(CIRCLE.mul(CIRCLE.parse("1/10"), x) for x in F)
    U = Entourage(CIRCLE.metric, Fraction(1, 10))
    result = max_matching(build_graph(F, shifted, U))
    assert result.perfect
    assert verify_pairing(F, shifted, U, result.pairing)
    assert not verify_pairing(F, shifted, U.with_radius(Fraction(1, 20)), result.pairing)
    assert not verify_pairing(F, shifted, U, {0: 0, 1: 0})


def test_instance_json_names_elements():
    E = FiniteWindow([Z2.parse("0,0")])
    payload = build_graph(E, E, Entourage(Z2.metric, 0)).to_json()
    assert payload == {"E": ["0,0"], "F": ["0,0"], "edges": [[0, 0]]}


circle_points = st.lists(st.integers(min_value=0, max_value=23), min_size=1, max_size=8, unique=True).map(
    lambda ks: FiniteWindow(CIRCLE.parse(f"{k}/24") for k in ks)
)
radii = st.fractions(min_value=0, max_value=Fraction(1, 2), max_denominator=48)


@STANDARD
@given(circle_points, st.integers(min_value=0, max_value=47), radii, radii)
def test_matching_number_grows_with_the_entourage(F, k, r, s):
    small, large = sorted((r, s))
    gF = FiniteWindow(CIRCLE.mul(CIRCLE.parse(f"{k}/48"), x) for x in F)
    assert matching_number(F, gF, Entourage(CIRCLE.metric, small)) <= matching_number(F, gF, Entourage(CIRCLE.metric, large))
