from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from folnerkit.errors import PreconditionError
from folnerkit.simplex import UnboundedProblem, certify_optimal, solve_max
from strategies import STANDARD, rationals


def test_textbook_program():
    c = [3, 2]
    A = [[1, 1], [1, 3], [1, 0]]
    b = [4, 6, 3]
    solution = solve_max(c, A, b)
    assert solution.value == 11
    assert solution.x == [3, 1]
    assert certify_optimal(c, A, b, solution)


def test_degenerate_program_terminates():
    # cycles under the largest-coefficient rule
    c = [10, -57, -9, -24]
    A = [
        [Fraction(1, 2), Fraction(-11, 2), Fraction(-5, 2), 9],
        [Fraction(1, 2), Fraction(-3, 2), Fraction(-1, 2), 1],
        [1, 0, 0, 0],
    ]
    b = [0, 0, 1]
    solution = solve_max(c, A, b)
    assert solution.value == 1
    assert certify_optimal(c, A, b, solution)


def test_unbounded_program():
    with pytest.raises(UnboundedProblem):
        solve_max([1], [[-1]], [1])


def test_infeasible_origin_is_refused():
    with pytest.raises(PreconditionError):
        solve_max([1], [[1]], [-1])
    with pytest.raises(PreconditionError):
        solve_max([1, 2], [[1]], [1])


@st.composite
def bounded_programs(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    m = draw(st.integers(min_value=0, max_value=4))
    c = [draw(rationals) for _ in range(n)]
    A = [[draw(rationals) for _ in range(n)] for _ in range(m)] + [[Fraction(1)] * n]
    b = [draw(st.fractions(min_value=0, max_value=5, max_denominator=6)) for _ in range(m)] + [Fraction(10)]
    return c, A, b


@STANDARD
@given(bounded_programs())
def test_every_bounded_program_is_certified(program):
    c, A, b = program
    solution = solve_max(c, A, b)
    assert certify_optimal(c, A, b, solution)
    assert solution.value >= 0
