"""Hall identity and the perfect-matching criterion on random small instances."""

import itertools
import random
from typing import Callable, List

from ..matching import BipartiteInstance, max_matching
from . import CheckResult, timed

INSTANCES = 500
MAX_SIDE = 10


def random_instances(count: int = INSTANCES, seed: int = 0) -> List[BipartiteInstance]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n_left = rng.randint(1, MAX_SIDE)
        n_right = rng.randint(1, MAX_SIDE)
        density = rng.random()
        edges = [(i, j) for i in range(n_left) for j in range(n_right) if rng.random() < density]
        out.append(BipartiteInstance.from_edges(n_left, n_right, edges))
    return out


def hall_deficiency(instance: BipartiteInstance) -> int:
    """max over left subsets S of |S| − |N(S)|, by enumeration."""
    rows = [frozenset(r) for r in instance.adjacency]
    best = 0
    for size in range(1, instance.n_left + 1):
        for S in itertools.combinations(range(instance.n_left), size):
            best = max(best, size - len(frozenset().union(*(rows[i] for i in S))))
    return best


def engine_mu(instance: BipartiteInstance) -> int:
    return max_matching(instance).mu


def hall_identity(matcher: Callable[[BipartiteInstance], int] = engine_mu) -> CheckResult:
    def body():
        instances = random_instances()
        bad = [k for k, inst in enumerate(instances) if matcher(inst) != inst.n_left - hall_deficiency(inst)]
        return not bad, f"{len(instances) - len(bad)}/{len(instances)} agree" + (f", first mismatch #{bad[0]}" if bad else "")
    return timed("hall_identity", body)


def perfect_hall(matcher: Callable[[BipartiteInstance], int] = engine_mu) -> CheckResult:
    def body():
        instances = random_instances()
        bad = [k for k, inst in enumerate(instances) if (matcher(inst) == inst.n_left) != (hall_deficiency(inst) == 0)]
        perfect = sum(1 for inst in instances if hall_deficiency(inst) == 0)
        return not bad, f"{len(bad)} disagreements, {perfect} Hall-perfect instances"
    return timed("perfect_hall", body)


checks = [hall_identity, perfect_hall]
