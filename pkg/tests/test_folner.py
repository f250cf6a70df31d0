from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from folnerkit.errors import PreconditionError
from folnerkit.folner import (
    action_defect,
    conjugated_entourage,
    discrete_defect,
    folner_search,
    generator_action_profile,
    left_action,
    matching_from_action,
    pairwise_defect,
    seminorm_bridge,
    topological_defect,
)
from folnerkit.groups import Entourage, FiniteWindow, translate_window
from folnerkit.matching import matching_number
from strategies import CIRCLE, F2, H3, QUICK, Z2

E_Z2 = FiniteWindow(Z2.standard_generators())
EXACT = Entourage(Z2.metric, 0)


@pytest.mark.parametrize("side", [2, 5, 10])
def test_box_defect(side):
    cert = topological_defect(Z2.box(side), E_Z2, EXACT)
    assert cert.theta == 1 - Fraction(1, side) == discrete_defect(Z2.box(side), E_Z2)
    assert cert.rederive_theta() == cert.theta
    assert cert.pairings_valid()


def test_certificate_json_is_self_contained():
    payload = topological_defect(Z2.box(2), E_Z2, EXACT).to_json()
    assert payload["theta"] == "1/2"
    assert payload["radius"] == "0"
    assert [m["mu"] for m in payload["matchings"]] == [2, 2]
    assert payload["model"]["kind"] == "lattice"


def test_tampered_pairing_is_detected():
    cert = topological_defect(Z2.box(3), E_Z2, EXACT)
    matching = cert.matchings[0]
    matching.result.pairing[0] = 0
    assert not cert.pairings_valid()


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_free_ball_profile(n):
    cert = topological_defect(F2.ball(n), FiniteWindow(F2.parse_many(["a", "b"])), Entourage(F2.metric, 0))
    assert cert.theta == Fraction(3 ** n - 1, 2 * 3 ** n - 1)


def test_circle_rotations_are_matched_within_the_entourage():
    F = CIRCLE.grid(12)
    U = Entourage(CIRCLE.metric, Fraction(1, 24))
    for g in ("1/3", "1/8"):
        assert topological_defect(F, FiniteWindow([CIRCLE.parse(g)]), U).theta == 1
    assert topological_defect(F, FiniteWindow([CIRCLE.parse("1/8")]), U.with_radius(0)).theta == 0


def test_empty_set_is_refused():
    with pytest.raises(PreconditionError):
        topological_defect(FiniteWindow(), E_Z2, EXACT)


def test_pairwise_defect_on_a_box():
    E = FiniteWindow(Z2.parse_many(["0,0", "1,0", "0,1"]))
    # (1,0)F against (0,1)F overlap in (side−1)² points
    assert pairwise_defect(Z2.box(4), E, EXACT) == Fraction(9, 16)


def test_seminorm_bridge_bounds_on_a_box():
    rows = seminorm_bridge(topological_defect(Z2.box(4), E_Z2, EXACT))
    assert all(row.passed for row in rows)
    assert [(row.unit_value, row.full_value) for row in rows] == [(Fraction(1, 4), Fraction(1, 2))] * 2
    assert rows[0].unit_bound == Fraction(5, 8)
    assert rows[0].full_bound == Fraction(7, 8)


def test_seminorm_bridge_on_the_circle():
    cert = topological_defect(CIRCLE.grid(8), FiniteWindow([CIRCLE.parse("1/16")]), Entourage(CIRCLE.metric, Fraction(1, 16)))
    assert cert.theta == 1
    assert all(row.passed for row in seminorm_bridge(cert))


def test_conjugated_entourage():
    U = Entourage(F2.metric, 5)
    assert conjugated_entourage(F2.parse_many(["a"]), U).radius == 3
    assert conjugated_entourage(F2.parse_many(["ab"]), U).radius == 1
    assert conjugated_entourage(Z2.parse_many(["3,3"]), Entourage(Z2.metric, 2)).radius == 2


def test_action_profile_of_translations():
    F = Z2.box(3)
    profile = dict(generator_action_profile(F, Z2.parse_many(["0,0", "1,0"]), left_action(Z2)))
    assert profile[(Z2.parse("0,0"),)] == 1
    assert profile[(Z2.parse("1,0"),)] == 1
    assert profile[(Z2.parse("0,0"), Z2.parse("1,0"))] == Fraction(4, 3)
    assert action_defect(F, [Z2.parse("0,1")], left_action(Z2)) == 1


def test_matching_read_off_an_action():
    F = Z2.box(3)
    g = Z2.parse("1,0")
    image = {x: Z2.mul(g, x) for x in F}
    result = matching_from_action(F, g, image, EXACT)
    assert result.mu == 6 <= matching_number(F, translate_window(g, F), EXACT)


def test_search_finds_the_first_good_box():
    result = folner_search(Z2, E_Z2, EXACT, Fraction(9, 10), "boxes", budget=20)
    assert result.found and result.reason == "target met"
    assert result.certificate.F == Z2.box(10)
    assert [row.label for row in result.rows][-1] == "box(10)"
    assert result.evaluated == 10


def test_search_reports_best_when_budget_runs_out():
    result = folner_search(F2, FiniteWindow(F2.parse_many(["a", "b"])), Entourage(F2.metric, 0), Fraction(3, 5), "balls", budget=4)
    assert not result.found and result.reason == "budget exhausted"
    assert result.best_theta == Fraction(80, 161)
    assert all(not row.passed for row in result.rows)


def test_search_is_deterministic_across_worker_counts():
    runs = [folner_search(Z2, E_Z2, EXACT, Fraction(4, 5), "boxes", 10, workers=w) for w in (1, 3)]
    assert runs[0].certificate.to_json() == runs[1].certificate.to_json()
    assert [r.theta for r in runs[0].rows] == [r.theta for r in runs[1].rows]


def test_local_search_improves_from_the_unit_ball():
    result = folner_search(H3, FiniteWindow(H3.standard_generators()), Entourage(H3.metric, 0), Fraction(1, 2), "local", budget=200, seed=0)
    assert result.best_theta >= topological_defect(H3.ball(1), FiniteWindow(H3.standard_generators()), Entourage(H3.metric, 0)).theta


def test_grid_search_on_the_circle():
    U = Entourage(CIRCLE.metric, Fraction(1, 30))
    result = folner_search(CIRCLE, FiniteWindow([CIRCLE.parse("1/7")]), U, Fraction(1), "grid", budget=40)
    assert result.found
    assert result.certificate.pairings_valid()
    assert all(row.label.startswith("grid(") for row in result.rows)


@pytest.mark.parametrize("model, strategy", [(CIRCLE, "balls"), (F2, "boxes"), (Z2, "grid"), (Z2, "spiral")])
def test_strategy_must_fit_the_model(model, strategy):
    with pytest.raises(PreconditionError):
        folner_search(model, FiniteWindow([model.identity()]), Entourage(model.metric, 0), Fraction(1, 2), strategy, 5)


box_points = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=10, unique=True).map(
    lambda cells: FiniteWindow(Z2.element(c) for c in cells)
)
shifts = st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=4, unique=True)


@QUICK
@given(box_points, shifts, st.integers(min_value=1, max_value=4))
def test_defect_cannot_drop_on_a_smaller_translator_set(F, cells, keep):
    E = FiniteWindow(Z2.element(c) for c in cells)
    fewer = FiniteWindow(Z2.element(c) for c in cells[:keep])
    assert topological_defect(F, fewer, EXACT).theta >= topological_defect(F, E, EXACT).theta
