import math
from fractions import Fraction

import pytest

from folnerkit.errors import BudgetExhaustedError, ConstructionError, NotWobblingError, PreconditionError, SupplyExhaustedError
from folnerkit.groups import CyclicGroup, Entourage, FiniteWindow, LatticeGroup
from folnerkit.perturb import (
    PerturbedAction,
    build_perturbation,
    decompose_wobbling,
    moving_injection,
    nice_folner_package,
    permutation_closure,
    precompact_cover_witness,
    precompact_perturbation,
    verify_perturbation,
    wobbling_mean_check,
)
from strategies import CIRCLE, Z2

Z = LatticeGroup(dimension=1)
Z12 = CyclicGroup(modulus=12)


def circle_ball(radius):
    return Entourage(CIRCLE.metric, Fraction(radius))


def test_moving_injection_separates_translates():
    F = CIRCLE.grid(4)
    g = CIRCLE.parse("1/4")
    U = circle_ball("1/10")
    phi = moving_injection(F, [CIRCLE.identity(), g], U, CIRCLE.grid(40))
    image = set(phi.values())
    assert len(image) == len(F)
    assert all(U.relates(x, y) for x, y in phi.items())
    assert not image & {CIRCLE.mul(g, y) for y in image}


def test_moving_injection_prefers_moving_points():
    phi = moving_injection(FiniteWindow([CIRCLE.identity()]), [CIRCLE.parse("1/2")], circle_ball("1/10"), CIRCLE.grid(20))
    assert phi == {CIRCLE.identity(): CIRCLE.parse("1/20")}


def test_moving_injection_on_the_half_turn():
    half = CIRCLE.parse("1/2")
    phi = moving_injection(CIRCLE.grid(2), [half], circle_ball("1/8"), CIRCLE.grid(16))
    assert phi == {CIRCLE.identity(): CIRCLE.parse("1/16"), half: CIRCLE.parse("7/16")}


def test_moving_injection_with_only_the_identity_is_the_identity():
    F = CIRCLE.grid(3)
    assert moving_injection(F, [CIRCLE.identity()], circle_ball(0), F) == {x: x for x in F}


def test_moving_injection_failures():
    F = CIRCLE.grid(2)
    half = CIRCLE.parse("1/2")
    with pytest.raises(SupplyExhaustedError):
        moving_injection(F, [half], circle_ball(0), F)
    with pytest.raises(BudgetExhaustedError):
        moving_injection(CIRCLE.grid(4), [CIRCLE.parse("1/4")], circle_ball("1/10"), CIRCLE.grid(40), max_steps=1)
    with pytest.raises(PreconditionError):
        moving_injection(Z2.box(2), Z2.standard_generators(), Entourage(Z2.metric, 1), Z2.box(4))


@pytest.mark.slow
def test_nice_package_properties():
    U = circle_ball("1/10")
    package = nice_folner_package(Fraction(3, 4), CIRCLE.parse_many(["0", "1/5"]), U)
    assert all(package.check(CIRCLE, U).values())
    assert len(package.D) >= Fraction(3, 4) * len(package.F)
    moved = package.shifted(CIRCLE, CIRCLE.parse("1/3"))
    assert all(moved.check(CIRCLE, U).values())
    assert moved.to_json()["theta"] == "3/4"


def test_trivial_package_and_discrete_refusal():
    package = nice_folner_package(Fraction(1, 2), [CIRCLE.identity()], circle_ball("1/10"))
    assert package.F.to_json() == ["0"] and package.phi == {}
    with pytest.raises(PreconditionError):
        nice_folner_package(Fraction(1, 2), Z2.standard_generators(), Entourage(Z2.metric, 3))


@pytest.mark.slow
def test_assembled_perturbation_is_close_and_involutive():
    U = circle_ball("1/10")
    family = [(CIRCLE.parse_many(["0", "1/5"]), 4), (CIRCLE.parse_many(["0", "2/5"]), 4)]
    alpha = build_perturbation(family, U)
    report = verify_perturbation(alpha, U)
    assert report.ok and not report.violations
    assert all(alpha.involutions.values())
    assert [row.passed for row in report.rosenblatt] == [True, True]
    footprints = [p.footprint(CIRCLE) for p in alpha.packages]
    assert not footprints[0] & footprints[1]


@pytest.mark.parametrize(
    "family",
    [
        [(CIRCLE.parse_many(["1/5"]), 4)],
        [(CIRCLE.parse_many(["0", "1/5"]), 0)],
    ],
)
def test_build_perturbation_validates_its_family(family):
    with pytest.raises(PreconditionError):
        build_perturbation(family, circle_ball("1/10"))


def test_build_perturbation_needs_a_grid_model():
    with pytest.raises(PreconditionError):
        build_perturbation([(Z2.parse_many(["0,0"]), 2)], Entourage(Z2.metric, 1))


def test_translation_action_verifies_and_detects_tampering():
    window = CIRCLE.grid(12)
    g = CIRCLE.parse("1/12")
    alpha = PerturbedAction.translations(CIRCLE, window, FiniteWindow([g]), Fraction(1, 24))
    U = circle_ball("1/24")
    clean = verify_perturbation(alpha, U)
    assert clean.ok and clean.checked == 12
    assert alpha.is_involution(g)

    far = alpha.with_entry(g, CIRCLE.identity(), CIRCLE.parse("1/2"))
    report = verify_perturbation(far, U)
    assert [(str(v.h), v.distance) for v in report.violations] == [("0", Fraction(5, 12))]
    assert report.non_injective == (g,)
    assert not report.ok


def test_action_json_round_trip():
    window = CIRCLE.grid(6)
    alpha = PerturbedAction.translations(CIRCLE, window, FiniteWindow(CIRCLE.parse_many(["1/6", "1/3"])))
    again = PerturbedAction.from_json(CIRCLE, alpha.to_json())
    assert again.rows == alpha.rows
    assert again.to_json() == alpha.to_json()


def test_precompact_circle():
    U = circle_ball("7/20")
    window = CIRCLE.grid(60)
    result = precompact_perturbation(U, window, CIRCLE.grid(12))
    assert len(result.F) == 6 and result.spacing == 10
    assert verify_perturbation(result.action, U).ok
    assert result.order_divides_factorial
    assert math.factorial(6) % result.group_order == 0
    net, covered = precompact_cover_witness(result.action, U)
    assert covered and len(net) <= len(result.F)
    for g, permutation in result.gamma.items():
        assert sorted(permutation) == list(range(len(result.F)))


def test_precompact_cyclic_group():
    window = FiniteWindow(Z12.element((r,)) for r in range(12))
    U = Entourage(Z12.metric, 3)
    result = precompact_perturbation(U, window)
    assert result.F.to_json() == ["0", "2", "4", "6", "8", "10"]
    assert verify_perturbation(result.action, U).ok
    assert result.order_divides_factorial


def test_precompact_preconditions():
    with pytest.raises(PreconditionError):
        precompact_perturbation(circle_ball("1/4"), FiniteWindow(CIRCLE.parse_many(["0", "1/3"])))
    with pytest.raises(PreconditionError):
        precompact_perturbation(circle_ball(0), CIRCLE.grid(6))
    with pytest.raises(PreconditionError):
        precompact_perturbation(Entourage(Z.metric, 1), FiniteWindow(Z.parse_many(["0", "1"])))


def test_permutation_closure_orders():
    assert permutation_closure([]) == 1
    assert permutation_closure([(1, 2, 0)]) == 3
    assert permutation_closure([(1, 0, 2), (1, 2, 0)]) == 6
    with pytest.raises(BudgetExhaustedError):
        permutation_closure([(1, 0, 2, 3, 4), (1, 2, 3, 4, 0)], cap=10)


def test_wobbling_decomposition_and_mean():
    zero, one = Z.parse("0"), Z.parse("1")
    gamma = {zero: one, one: zero}
    wobbling = decompose_wobbling(gamma, Z.parse_many(["-1", "1"]), Z.mul)
    assert {str(g): piece.to_json() for g, piece in wobbling.pieces.items()} == {"-1": ["1"], "1": ["0"]}
    assert wobbling.reapply(Z.mul) == gamma
    assert wobbling_mean_check(wobbling, {zero: Fraction(1, 2), one: Fraction(1, 2)})
    assert not wobbling_mean_check(wobbling, {zero: Fraction(1, 3), one: Fraction(2, 3)})
    with pytest.raises(PreconditionError):
        wobbling_mean_check(wobbling, {Z.parse("5"): Fraction(1)})


def test_wobbling_failures():
    zero, one = Z.parse("0"), Z.parse("1")
    with pytest.raises(NotWobblingError) as caught:
        decompose_wobbling({zero: one, one: zero}, [one], Z.mul)
    assert caught.value.witness == one
    with pytest.raises(PreconditionError):
        decompose_wobbling({zero: one, one: one}, [zero, one], Z.mul)


def test_precompact_refuses_a_grid_without_a_balanced_net():
    with pytest.raises(ConstructionError):
        precompact_perturbation(circle_ball("7/20"), CIRCLE.grid(13))
