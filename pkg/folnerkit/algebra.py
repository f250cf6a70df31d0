"""Finitely supported weights on a group and the UEB seminorms p_d.

p_d(a) is the supremum of a(f) over functions f with |f| ≤ 1 that are
1-Lipschitz for d. An optimal f on supp(a) extends to the whole group with the
same bounds (McShane extension clipped to [−1, 1]), so the supremum is the
value of a finite linear program over the support, which we solve exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from loguru import logger

from .config import limits
from .errors import ConstructionError, MissingValueError, ModelMismatchError, PreconditionError, SupplyExhaustedError, SupportTooLargeError
from .groups import FiniteWindow, GroupElement, GroupModel, InvariantPseudoMetric, format_rational, grid_sample, parse_rational
from .matching import BipartiteInstance, max_matching
from .simplex import certify_optimal, solve_max
from .workers import map_ordered

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, eq=False)
class FiniteWeight:
    """a ∈ ℝG with finite support; terms in canonical order, no zero weights."""
    model: GroupModel
    terms: Tuple[Tuple[GroupElement, Fraction], ...]
    norm1: Fraction = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "norm1", sum((abs(w) for _, w in self.terms), ZERO))

    @classmethod
    def of(cls, model: GroupModel, mapping: Union[Mapping[GroupElement, Fraction], Iterable[Tuple[GroupElement, Fraction]]]) -> "FiniteWeight":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        merged: Dict[GroupElement, Fraction] = {}
        for g, w in items:
            model.check(g)
            merged[g] = merged.get(g, ZERO) + parse_rational(w)
        return cls(model, tuple(sorted((g, w) for g, w in merged.items() if w != 0)))

    @classmethod
    def zero(cls, model: GroupModel) -> "FiniteWeight":
        return cls(model, ())

    @classmethod
    def delta(cls, model: GroupModel, g: GroupElement) -> "FiniteWeight":
        return cls.of(model, {g: ONE})

    @classmethod
    def uniform(cls, model: GroupModel, F: Iterable[GroupElement]) -> "FiniteWeight":
        """δ_F, the normalized counting weight of a nonempty finite set."""
        F = FiniteWindow(F)
        if not len(F):
            raise PreconditionError("uniform weight of an empty set")
        w = Fraction(1, len(F))
        return cls.of(model, {x: w for x in F})

    @property
    def support(self) -> FiniteWindow:
        return FiniteWindow(g for g, _ in self.terms)

    @property
    def weights(self) -> List[Fraction]:
        return [w for _, w in self.terms]

    def as_dict(self) -> Dict[GroupElement, Fraction]:
        return dict(self.terms)

    def __getitem__(self, g: GroupElement) -> Fraction:
        return self.as_dict().get(g, ZERO)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteWeight):
            return NotImplemented
        return self.model.name == other.model.name and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.model.name, self.terms))

    @property
    def is_stochastic(self) -> bool:
        return self.norm1 == 1 and all(w > 0 for _, w in self.terms)

    def _same_model(self, other: "FiniteWeight") -> None:
        if self.model.name != other.model.name:
            raise ModelMismatchError(f"{self.model.name} weight combined with {other.model.name} weight")

    def __add__(self, other: "FiniteWeight") -> "FiniteWeight":
        self._same_model(other)
        return FiniteWeight.of(self.model, list(self.terms) + list(other.terms))

    def __neg__(self) -> "FiniteWeight":
        return FiniteWeight(self.model, tuple((g, -w) for g, w in self.terms))

    def __sub__(self, other: "FiniteWeight") -> "FiniteWeight":
        return self + (-other)

    def scaled(self, c: Fraction) -> "FiniteWeight":
        c = parse_rational(c)
        return FiniteWeight.of(self.model, [(g, c * w) for g, w in self.terms])

    def translate(self, g: GroupElement) -> "FiniteWeight":
        """ga = δ_g a, i.e. Σ a(x) δ_{gx}."""
        return FiniteWeight.of(self.model, [(self.model.mul(g, x), w) for x, w in self.terms])

    def evaluate(self, f: Mapping[GroupElement, Fraction]) -> Fraction:
        total = ZERO
        for x, w in self.terms:
            if x not in f:
                raise MissingValueError(f"function has no value at {x}")
            total += w * f[x]
        return total

    def to_json(self) -> Dict[str, List[str]]:
        return {"support": [str(g) for g, _ in self.terms], "weights": [format_rational(w) for _, w in self.terms]}

    @classmethod
    def from_json(cls, model: GroupModel, payload: Mapping[str, Sequence[str]]) -> "FiniteWeight":
        support = model.parse_many(payload["support"])
        weights = [parse_rational(w) for w in payload["weights"]]
        if len(support) != len(weights):
            raise PreconditionError("support and weights differ in length")
        return cls.of(model, list(zip(support, weights)))


def convolve(a: FiniteWeight, b: FiniteWeight) -> FiniteWeight:
    a._same_model(b)
    model = a.model
    return FiniteWeight.of(model, [(model.mul(g, h), wa * wb) for g, wa in a.terms for h, wb in b.terms])


def r_transform(a: FiniteWeight, f: Mapping[GroupElement, Fraction], window: Iterable[GroupElement]) -> Dict[GroupElement, Fraction]:
    """(R_a f)(x) = Σ_g a(g) f(xg) for every x of the window."""
    out: Dict[GroupElement, Fraction] = {}
    for x in window:
        total = ZERO
        for g, w in a.terms:
            y = a.model.mul(x, g)
            if y not in f:
                raise MissingValueError(f"R_a f({x}) needs f({y})")
            total += w * f[y]
        out[x] = total
    return out


@dataclass(frozen=True)
class SeminormResult:
    value: Fraction
    witness: Dict[GroupElement, Fraction]
    pivots: int
    lower: Fraction
    certified: bool

    @property
    def witness_range(self) -> Tuple[Fraction, Fraction]:
        if not self.witness:
            return (ZERO, ZERO)
        return (min(self.witness.values()), max(self.witness.values()))


def lipschitz_pairs(points: Sequence[GroupElement], d: InvariantPseudoMetric, span: Fraction) -> List[Tuple[int, int, Fraction]]:
    """Lipschitz constraints f_i − f_j ≤ d_ij that are not implied by the others.

    A pair is dropped when d_ij ≥ span (the value bounds already imply it) or
    when some third point lies metrically between i and j.
    """
    n = len(points)
    dist = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            dist[i][j] = dist[j][i] = d(points[i], points[j])
    pairs = []
    for i in range(n):
        row_i = dist[i]
        for j in range(n):
            dij = row_i[j]
            if i == j or dij >= span:
                continue
            between = any(
                k != i and k != j and row_i[k] < dij and row_i[k] + dist[k][j] == dij
                for k in range(n)
            )
            if not between:
                pairs.append((i, j, dij))
    return pairs


def _seminorm(a: FiniteWeight, d: Optional[InvariantPseudoMetric], lower: Fraction) -> SeminormResult:
    d = d or a.model.metric
    if d.model.name != a.model.name:
        raise ModelMismatchError("metric and weight live on different models")
    points = [g for g, _ in a.terms]
    if not points:
        return SeminormResult(ZERO, {}, 0, lower, True)
    cap = limits().lp_support_cap
    if len(points) > cap:
        raise SupportTooLargeError(f"support of {len(points)} points exceeds the LP cap {cap}")

    span = ONE - lower
    n = len(points)
    pairs = lipschitz_pairs(points, d, span)
    A: List[List[Fraction]] = []
    b: List[Fraction] = []
    for i in range(n):
        row = [ZERO] * n
        row[i] = ONE
        A.append(row)
        b.append(span)
    for i, j, dij in pairs:
        row = [ZERO] * n
        row[i] = ONE
        row[j] = -ONE
        A.append(row)
        b.append(dij)
    c = [w for _, w in a.terms]
    solution = solve_max(c, A, b)
    total = sum(c, ZERO)
    value = solution.value + lower * total
    witness = {x: u + lower for x, u in zip(points, solution.x)}
    certified = certify_optimal(c, A, b, solution)
    logger.debug("p_d on {} points ({} pairs kept): {} in {} pivots", n, len(pairs), value, solution.pivots)
    return SeminormResult(value, witness, solution.pivots, lower, certified)


def seminorm_pd(a: FiniteWeight, d: Optional[InvariantPseudoMetric] = None) -> SeminormResult:
    """p_d(a) with f ranging over 1-Lipschitz functions into [−1, 1]."""
    return _seminorm(a, d, -ONE)


def seminorm_unit(a: FiniteWeight, d: Optional[InvariantPseudoMetric] = None) -> SeminormResult:
    """Same program with f restricted to [0, 1]."""
    return _seminorm(a, d, ZERO)


@dataclass(frozen=True)
class DefectRow:
    g: GroupElement
    full: SeminormResult
    unit: SeminormResult


@dataclass(frozen=True)
class InvarianceDefect:
    full: Fraction
    unit: Fraction
    rows: List[DefectRow]


def invariance_defect(a: FiniteWeight, E: Iterable[GroupElement], d: Optional[InvariantPseudoMetric] = None, workers: Optional[int] = None) -> InvarianceDefect:
    """max over g ∈ E of p_d(a − ga), plus the [0, 1]-restricted variant."""
    if not a.is_stochastic:
        raise PreconditionError("invariance defect needs a stochastic weight")

    def row(g: GroupElement) -> DefectRow:
        diff = a - a.translate(g)
        return DefectRow(g, seminorm_pd(diff, d), seminorm_unit(diff, d))

    rows = map_ordered(row, list(FiniteWindow(E)), workers)
    return InvarianceDefect(
        full=max((r.full.value for r in rows), default=ZERO),
        unit=max((r.unit.value for r in rows), default=ZERO),
        rows=rows,
    )


def apportion(weights: Sequence[Fraction], tolerance: Fraction, n_max: int) -> Tuple[int, List[int]]:
    """Smallest n ≤ n_max and counts c with Σ|w − c/n| ≤ tolerance, by largest remainders."""
    for n in range(1, n_max + 1):
        scaled = [w * n for w in weights]
        counts = [int(s) for s in scaled]
        remainder = n - sum(counts)
        order = sorted(range(len(weights)), key=lambda i: (-(scaled[i] - counts[i]), i))
        for i in order[:remainder]:
            counts[i] += 1
        error = sum((abs(w - Fraction(c, n)) for w, c in zip(weights, counts)), ZERO)
        if error <= tolerance:
            return n, counts
    raise ConstructionError(f"no rational approximation within {tolerance} with denominator ≤ {n_max}")


@dataclass(frozen=True)
class UniformApproximation:
    F: FiniteWindow
    denominator: int
    counts: Dict[GroupElement, int]
    pieces: Dict[GroupElement, FiniteWindow]
    defect: Optional[Fraction]


def approx_by_uniform(
    a: FiniteWeight,
    eps: Fraction,
    supply: Union[FiniteWindow, int],
    d: Optional[InvariantPseudoMetric] = None,
    n_max: Optional[int] = None,
) -> UniformApproximation:
    """A finite F with p_d(a − δ_F) ≤ eps.

    The weights are first rounded to multiples of 1/n within eps/2 in ℓ¹, then
    each support point x receives n·b(x) distinct supply points from the open
    ball of radius eps/2 around it, all pieces disjoint.
    """
    eps = parse_rational(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if not a.is_stochastic:
        raise PreconditionError("approx_by_uniform needs a stochastic weight")
    d = d or a.model.metric
    model = a.model
    support = a.support
    weights = a.weights

    if len(set(weights)) == 1:
        pieces = {x: FiniteWindow([x]) for x in support}
        return UniformApproximation(support, len(support), {x: 1 for x in support}, pieces, ZERO)
    if eps >= 2:
        x = support[0]
        return UniformApproximation(FiniteWindow([x]), 1, {x: 1}, {x: FiniteWindow([x])}, _verified_defect(a, FiniteWindow([x]), d))

    if isinstance(supply, int):
        supply = grid_sample(model, supply)
    n, counts = apportion(weights, eps / 2, n_max or limits().denominator_cap)
    radius = eps / 2

    slots: List[GroupElement] = []
    adjacency: List[Tuple[int, ...]] = []
    for x, count in zip(support, counts):
        near = sorted((d(x, y), y) for y in supply if d(x, y) < radius)
        candidates = tuple(supply.index(y) for _, y in near)
        for _ in range(count):
            slots.append(x)
            adjacency.append(candidates)
    result = max_matching(BipartiteInstance(tuple(adjacency), len(supply)))
    if result.mu < len(slots):
        raise SupplyExhaustedError(f"supply of {len(supply)} points cannot host {len(slots)} disjoint piece points within {radius}")

    chosen: Dict[GroupElement, List[GroupElement]] = {x: [] for x in support}
    for slot, j in sorted(result.pairing.items()):
        chosen[slots[slot]].append(supply[j])
    F = FiniteWindow(y for ys in chosen.values() for y in ys)
    pieces = {x: FiniteWindow(ys) for x, ys in chosen.items() if ys}
    defect = _verified_defect(a, F, d)
    if defect is not None and defect > eps:
        raise ConstructionError(f"approximation defect {defect} exceeds {eps}")
    logger.info("approx_by_uniform: n={} |F|={} defect={}", n, len(F), defect)
    return UniformApproximation(F, n, dict(zip(support, counts)), pieces, defect)


def _verified_defect(a: FiniteWeight, F: FiniteWindow, d: InvariantPseudoMetric) -> Optional[Fraction]:
    diff = a - FiniteWeight.uniform(a.model, F)
    try:
        return seminorm_pd(diff, d).value
    except SupportTooLargeError:
        logger.warning("skipping LP verification of approximation: support {} too large", len(diff))
        return None


def is_lipschitz(f: Mapping[GroupElement, Fraction], d: InvariantPseudoMetric, bound: Fraction = ONE) -> bool:
    points = list(f)
    return all(abs(f[x] - f[y]) <= bound * d(x, y) for i, x in enumerate(points) for y in points[i + 1:])
