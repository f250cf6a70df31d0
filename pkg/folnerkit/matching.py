"""Bipartite graphs B(E, F, U), maximum matchings and Hall deficiency witnesses.

The engine is Hopcroft–Karp over integer vertex indices. Left vertices are
visited in window order and adjacency lists are scanned front to back, so a
given instance always produces the same pairing. Dictionaries keyed by ints
are used instead of sets for the same reason.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple

from loguru import logger

from .groups import Entourage, FiniteWindow, GroupElement
from .workers import map_ordered

NIL = -1
FAKE_INFINITY = -1


@dataclass(frozen=True)
class BipartiteInstance:
    adjacency: Tuple[Tuple[int, ...], ...]
    n_right: int
    left: Optional[FiniteWindow] = field(default=None, compare=False)
    right: Optional[FiniteWindow] = field(default=None, compare=False)

    @property
    def n_left(self) -> int:
        return len(self.adjacency)

    @classmethod
    def from_edges(cls, n_left: int, n_right: int, edges: Iterable[Tuple[int, int]]) -> "BipartiteInstance":
        rows: List[set] = [set() for _ in range(n_left)]
        for i, j in edges:
            if not (0 <= i < n_left and 0 <= j < n_right):
                raise ValueError(f"edge ({i}, {j}) outside a {n_left}×{n_right} instance")
            rows[i].add(j)
        return cls(tuple(tuple(sorted(r)) for r in rows), n_right)

    def edges(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, row in enumerate(self.adjacency) for j in row]

    def neighbourhood(self, S: Iterable[int]) -> List[int]:
        return sorted({j for i in S for j in self.adjacency[i]})

    def transpose(self) -> "BipartiteInstance":
        return BipartiteInstance.from_edges(self.n_right, self.n_left, ((j, i) for i, j in self.edges()))

    def to_json(self) -> Dict[str, object]:
        return {
            "E": self.left.to_json() if self.left is not None else list(range(self.n_left)),
            "F": self.right.to_json() if self.right is not None else list(range(self.n_right)),
            "edges": [[i, j] for i, j in self.edges()],
        }


@dataclass(frozen=True)
class MatchingResult:
    pairing: Dict[int, int]
    mu: int
    witness: Tuple[int, ...]
    witness_neighbours: Tuple[int, ...]
    n_left: int

    @property
    def perfect(self) -> bool:
        return self.mu == self.n_left

    @property
    def deficiency(self) -> int:
        return len(self.witness) - len(self.witness_neighbours)

    def element_pairs(self, instance: BipartiteInstance) -> List[Tuple[GroupElement, GroupElement]]:
        return [(instance.left[i], instance.right[j]) for i, j in sorted(self.pairing.items())]

    def to_json(self) -> Dict[str, object]:
        return {
            "mu": self.mu,
            "pairing": [[i, j] for i, j in sorted(self.pairing.items())],
            "witness": list(self.witness),
        }


class HopcroftKarp:
    """Hopcroft–Karp on left vertices 0..n_left−1 and right vertices 0..n_right−1.

    Augmenting paths are searched with an explicit stack so that long
    alternating paths do not hit the recursion limit.
    """

    def __init__(self, adjacency: Sequence[Sequence[int]], n_right: int):
        self._adjacency = adjacency
        self._n_left = len(adjacency)
        self._pair_left: List[int] = [NIL] * self._n_left
        self._pair_right: List[int] = [NIL] * n_right
        self._dist_left: List[int] = [FAKE_INFINITY] * self._n_left
        self._reference_distance = FAKE_INFINITY
        self._next_edge: List[int] = [0] * self._n_left

    def run(self) -> Tuple[int, Dict[int, int]]:
        matchings = 0
        while self._bfs():
            self._next_edge = [0] * self._n_left
            for left in range(self._n_left):
                if self._pair_left[left] == NIL and self._augment_from(left):
                    matchings += 1
        return matchings, {i: j for i, j in enumerate(self._pair_left) if j != NIL}

    def _bfs(self) -> bool:
        queue: Deque[int] = deque()
        for left in range(self._n_left):
            if self._pair_left[left] == NIL:
                self._dist_left[left] = 0
                queue.append(left)
            else:
                self._dist_left[left] = FAKE_INFINITY
        self._reference_distance = FAKE_INFINITY
        while queue:
            left = queue.popleft()
            depth = self._dist_left[left]
            if self._reference_distance != FAKE_INFINITY and depth >= self._reference_distance:
                continue
            for right in self._adjacency[left]:
                other = self._pair_right[right]
                if other == NIL:
                    if self._reference_distance == FAKE_INFINITY:
                        self._reference_distance = depth + 1
                elif self._dist_left[other] == FAKE_INFINITY:
                    self._dist_left[other] = depth + 1
                    queue.append(other)
        return self._reference_distance != FAKE_INFINITY

    def _augment_from(self, root: int) -> bool:
        stack = [root]
        via: List[int] = []
        while stack:
            left = stack[-1]
            adjacency = self._adjacency[left]
            descended = False
            while self._next_edge[left] < len(adjacency):
                right = adjacency[self._next_edge[left]]
                self._next_edge[left] += 1
                other = self._pair_right[right]
                if other == NIL:
                    if self._dist_left[left] + 1 == self._reference_distance:
                        via.append(right)
                        for l_vertex, r_vertex in zip(stack, via):
                            self._pair_left[l_vertex] = r_vertex
                            self._pair_right[r_vertex] = l_vertex
                        return True
                elif self._dist_left[other] == self._dist_left[left] + 1:
                    via.append(right)
                    stack.append(other)
                    descended = True
                    break
            if not descended:
                self._dist_left[left] = FAKE_INFINITY
                stack.pop()
                if via:
                    via.pop()
        return False


def build_graph(E: FiniteWindow, F: FiniteWindow, U: Entourage, workers: Optional[int] = None) -> BipartiteInstance:
    """B(E, F, U): (i, j) is an edge iff F[j]·E[i]⁻¹ ∈ U."""
    model = U.model
    model.check(*E, *F)
    if U.radius == 0 and U.metric.scale > 0:
        # every built-in norm vanishes only at e, so U = {e}
        return BipartiteInstance(tuple((F.index(x),) if x in F else () for x in E), len(F), E, F)

    def row(x: GroupElement) -> Tuple[int, ...]:
        x_inv = model.inv(x)
        return tuple(j for j, y in enumerate(F) if U.contains(model.mul(y, x_inv)))

    adjacency = tuple(map_ordered(row, list(E), workers))
    return BipartiteInstance(adjacency, len(F), E, F)


def konig_witness(instance: BipartiteInstance, pairing: Dict[int, int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Left vertices reachable from unmatched left vertices by alternating paths.

    For a maximum matching this set S has |S| − |N(S)| = |E| − μ, the largest
    deficiency of any left subset, and N(S) is exactly the reachable right side.
    """
    pair_right = {j: i for i, j in pairing.items()}
    reached_left = {i for i in range(instance.n_left) if i not in pairing}
    reached_right = set()
    queue = deque(sorted(reached_left))
    while queue:
        i = queue.popleft()
        for j in instance.adjacency[i]:
            if j in reached_right:
                continue
            reached_right.add(j)
            partner = pair_right.get(j)
            if partner is not None and partner not in reached_left:
                reached_left.add(partner)
                queue.append(partner)
    return tuple(sorted(reached_left)), tuple(sorted(reached_right))


def max_matching(instance: BipartiteInstance) -> MatchingResult:
    mu, pairing = HopcroftKarp(instance.adjacency, instance.n_right).run()
    witness, neighbours = konig_witness(instance, pairing)
    logger.trace("matching {}x{}: mu={} deficiency={}", instance.n_left, instance.n_right, mu, len(witness) - len(neighbours))
    return MatchingResult(pairing, mu, witness, neighbours, instance.n_left)


@dataclass(frozen=True)
class PerfectMatching:
    pairing: Optional[Dict[int, int]]
    violator: Tuple[int, ...]

    @property
    def exists(self) -> bool:
        return self.pairing is not None


def perfect_matching(instance: BipartiteInstance) -> PerfectMatching:
    """A pairing covering every left vertex, or a set S with |S| > |N(S)|."""
    result = max_matching(instance)
    if result.perfect:
        return PerfectMatching(result.pairing, ())
    return PerfectMatching(None, result.witness)


def matching_number(E: FiniteWindow, F: FiniteWindow, U: Entourage, workers: Optional[int] = None) -> int:
    """μ(E, F, U)"""
    return max_matching(build_graph(E, F, U, workers)).mu


def verify_pairing(E: Sequence[GroupElement], F: Sequence[GroupElement], U: Entourage, pairing: Dict[int, int]) -> bool:
    """Re-check a stored pairing from (E, F, U) alone."""
    if len(set(pairing.values())) != len(pairing):
        return False
    return all(U.relates(E[i], F[j]) for i, j in pairing.items())
