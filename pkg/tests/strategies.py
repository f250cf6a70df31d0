"""Shared hypothesis strategies and settings profiles."""

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from folnerkit.groups import CircleGroup, CyclicGroup, FreeGroup, HeisenbergGroup, LatticeGroup

QUICK = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
STANDARD = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
THOROUGH = settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])

Z2 = LatticeGroup(dimension=2)
F2 = FreeGroup(rank=2)
H3 = HeisenbergGroup()
CIRCLE = CircleGroup()
Z9 = CyclicGroup(modulus=9)

small_ints = st.integers(min_value=-6, max_value=6)
lattice_elements = st.tuples(small_ints, small_ints).map(Z2.element)
free_elements = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=6).map(F2.element)
tiny_ints = st.integers(min_value=-1, max_value=1)
heisenberg_elements = st.tuples(tiny_ints, tiny_ints, tiny_ints).map(H3.element)
circle_elements = st.fractions(min_value=0, max_value=1, max_denominator=24).map(lambda x: CIRCLE.element((x,)))
cyclic_elements = st.integers(min_value=0, max_value=8).map(lambda r: Z9.element((r,)))

elements_by_model = st.sampled_from([
    (Z2, lattice_elements),
    (F2, free_elements),
    (H3, heisenberg_elements),
    (CIRCLE, circle_elements),
    (Z9, cyclic_elements),
])


@st.composite
def model_and_elements(draw, count: int = 3):
    model, elements = draw(elements_by_model)
    return model, [draw(elements) for _ in range(count)]


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=12)
probabilities = st.fractions(min_value=0, max_value=1, max_denominator=12)
