"""Seminorm LP against a grid brute force, and uniform approximation of weights."""

import math
import random
from fractions import Fraction
from typing import List, Tuple

from ..algebra import FiniteWeight, approx_by_uniform, seminorm_pd
from ..groups import CircleGroup, CyclicGroup, FreeGroup, GroupElement, GroupModel, HeisenbergGroup, LatticeGroup
from . import CheckResult, timed

STEP = Fraction(1, 100)


def _random_element(model: GroupModel, rng: random.Random) -> GroupElement:
    if isinstance(model, FreeGroup):
        return model.element(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(0, 4)))
    if isinstance(model, CircleGroup):
        return model.element((Fraction(rng.randint(0, 47), 48),))
    if isinstance(model, CyclicGroup):
        return model.element((rng.randint(0, model.modulus - 1),))
    if isinstance(model, HeisenbergGroup):
        return model.element(tuple(rng.randint(-1, 1) for _ in range(3)))
    return model.element(tuple(rng.randint(-3, 3) for _ in range(model.dimension)))


def random_pairs(count: int = 100, seed: int = 0) -> List[Tuple[GroupModel, GroupElement, GroupElement]]:
    rng = random.Random(seed)
    models = [LatticeGroup(dimension=2), FreeGroup(rank=2), CircleGroup(), CyclicGroup(modulus=9), HeisenbergGroup()]
    out = []
    while len(out) < count:
        model = models[len(out) % len(models)]
        x, y = _random_element(model, rng), _random_element(model, rng)
        if x != y:
            out.append((model, x, y))
    return out


def grid_brute_force(distance: Fraction) -> Fraction:
    """max f(x) − f(y) over f(x), f(y) ∈ [−1, 1] ∩ STEP·ℤ with |f(x) − f(y)| ≤ distance."""
    top = int(1 / STEP)
    reach = math.floor(distance / STEP)
    best = max(u - v for u in range(-top, top + 1) for v in range(-top, top + 1) if u - v <= reach)
    return best * STEP


def seminorm_oracle() -> CheckResult:
    def body():
        bad = []
        for model, x, y in random_pairs():
            d = model.metric(x, y)
            result = seminorm_pd(FiniteWeight.delta(model, x) - FiniteWeight.delta(model, y), model.metric)
            brute = grid_brute_force(d)
            if abs(result.value - brute) > 2 * STEP or not result.certified or result.value != min(Fraction(2), d):
                bad.append(f"{model.name}:{x},{y}")
        return not bad, f"{100 - len(bad)}/100 pairs agree" + (f", e.g. {bad[0]}" if bad else "")
    return timed("seminorm_oracle", body)


def random_weight(model: CircleGroup, rng: random.Random) -> FiniteWeight:
    points = rng.sample(range(20), rng.randint(1, 5))
    raw = [rng.randint(1, 6) for _ in points]
    total = sum(raw)
    return FiniteWeight.of(model, {model.element((Fraction(p, 20),)): Fraction(w, total) for p, w in zip(points, raw)})


def uniform_approximation(count: int = 50, seed: int = 0) -> CheckResult:
    def body():
        rng = random.Random(seed)
        model = CircleGroup()
        eps = Fraction(1, 5)
        worst = Fraction(0)
        for _ in range(count):
            a = random_weight(model, rng)
            approx = approx_by_uniform(a, eps, 400, model.metric)
            if approx.defect is None:
                return False, "LP verification skipped"
            worst = max(worst, approx.defect)
        return worst <= eps, f"worst p_d(a − δ_F) = {worst}"
    return timed("uniform_approximation", body)


checks = [seminorm_oracle, uniform_approximation]
