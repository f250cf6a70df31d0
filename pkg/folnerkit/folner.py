"""Følner defects and budgeted search for matching-based Følner sets.

A finite F is θ-Følner for (E, U) when μ(F, gF, U) ≥ θ|F| for every g ∈ E.
With U = {e} this is the classical |F ∩ gF| ≥ θ|F|.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from .algebra import FiniteWeight, seminorm_pd, seminorm_unit
from .config import limits
from .errors import PreconditionError, SupportTooLargeError, WindowLimitError
from .groups import Entourage, FiniteWindow, GroupElement, GroupModel, InvariantPseudoMetric, LatticeGroup, format_rational, translate_window
from .matching import BipartiteInstance, MatchingResult, build_graph, max_matching, verify_pairing
from .workers import map_ordered, worker_count

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class GeneratorMatching:
    g: GroupElement
    translate: FiniteWindow
    instance: BipartiteInstance
    result: MatchingResult

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.result.mu, self.instance.n_left)


@dataclass(frozen=True)
class BridgeRow:
    g: GroupElement
    theta_g: Fraction
    unit_value: Fraction
    full_value: Fraction

    @property
    def unit_bound(self) -> Fraction:
        return 1 - self.theta_g / 2

    @property
    def full_bound(self) -> Fraction:
        return 2 - 3 * self.theta_g / 2

    @property
    def passed(self) -> bool:
        return self.unit_value <= self.unit_bound and self.full_value <= self.full_bound


@dataclass(frozen=True)
class FolnerCertificate:
    model: GroupModel
    E: FiniteWindow
    U: Entourage
    F: FiniteWindow
    theta: Fraction
    matchings: Tuple[GeneratorMatching, ...]

    def rederive_theta(self) -> Fraction:
        return min((m.ratio for m in self.matchings), default=ONE)

    def pairings_valid(self) -> bool:
        for m in self.matchings:
            if m.translate != translate_window(m.g, self.F):
                return False
            if not verify_pairing(self.F, m.translate, self.U, m.result.pairing):
                return False
        return True

    def to_json(self) -> Dict[str, object]:
        return {
            "model": self.model.descriptor(),
            "E": self.E.to_json(),
            "radius": format_rational(self.U.radius),
            "F": self.F.to_json(),
            "theta": format_rational(self.theta),
            "matchings": [
                {"g": str(m.g), "gF": m.translate.to_json(), "mu": m.result.mu,
                 "pairing": [[i, j] for i, j in sorted(m.result.pairing.items())]}
                for m in self.matchings
            ],
        }


def _require_nonempty(F: FiniteWindow) -> None:
    if not len(F):
        raise PreconditionError("F must be nonempty")


def discrete_defect(F: FiniteWindow, E: FiniteWindow) -> Fraction:
    """min over g ∈ E of |F ∩ gF| / |F|."""
    _require_nonempty(F)
    members = F.as_set()
    ratios = [Fraction(len(members & translate_window(g, F).as_set()), len(F)) for g in E]
    return min(ratios, default=ONE)


def _generator_matching(F: FiniteWindow, g: GroupElement, U: Entourage) -> GeneratorMatching:
    gF = translate_window(g, F)
    instance = build_graph(F, gF, U, workers=1)
    return GeneratorMatching(g, gF, instance, max_matching(instance))


def topological_defect(F: FiniteWindow, E: FiniteWindow, U: Entourage, workers: Optional[int] = None) -> FolnerCertificate:
    """min over g ∈ E of μ(F, gF, U) / |F|, with the matchings kept as evidence."""
    _require_nonempty(F)
    U.model.check(*F, *E)
    matchings = tuple(map_ordered(lambda g: _generator_matching(F, g, U), list(E), workers))
    theta = min((m.ratio for m in matchings), default=ONE)
    return FolnerCertificate(U.model, E, U, F, theta, matchings)


def pairwise_defect(F: FiniteWindow, E: FiniteWindow, U: Entourage, workers: Optional[int] = None) -> Fraction:
    """min over ordered g, h ∈ E of μ(gF, hF, U) / |F|."""
    _require_nonempty(F)
    translates = {g: translate_window(g, F) for g in E}

    def ratio(pair: Tuple[GroupElement, GroupElement]) -> Fraction:
        g, h = pair
        if g == h:
            return ONE
        return Fraction(max_matching(build_graph(translates[g], translates[h], U, workers=1)).mu, len(F))

    return min(map_ordered(ratio, list(itertools.product(E, E)), workers), default=ONE)


def conjugated_entourage(E: Iterable[GroupElement], U: Entourage) -> Entourage:
    """A ball V ⊆ ⋂_{g ∈ E} g⁻¹Ug.

    Bi-invariant metrics give U back. For word metrics on non-abelian models
    |g v g⁻¹| ≤ |v| + 2|g|, so shrinking the radius by 2·max|g| is safe.
    """
    if U.metric.bi_invariant:
        return U
    reach = max((U.metric.norm(g) for g in E), default=ZERO)
    return U.with_radius(max(ZERO, U.radius - 2 * reach))


def left_action(model: GroupModel) -> Callable[[GroupElement, GroupElement], GroupElement]:
    return model.mul


def action_defect(F: Iterable[Hashable], E: Iterable[GroupElement], action: Callable[[GroupElement, Hashable], Hashable]) -> Fraction:
    """|EF| / |F| for a finite set of points F under ``action``."""
    points = set(F)
    if not points:
        raise PreconditionError("F must be nonempty")
    image = {action(g, x) for g in E for x in points}
    return Fraction(len(image), len(points))


def generator_action_profile(F: Iterable[Hashable], S: Sequence[GroupElement], action: Callable[[GroupElement, Hashable], Hashable]) -> List[Tuple[Tuple[GroupElement, ...], Fraction]]:
    """|EF|/|F| for every nonempty subset E of a small generator set S."""
    if len(S) > 12:
        raise PreconditionError("generator profile is exhaustive; keep S to at most 12 elements")
    points = list(F)
    return [
        (subset, action_defect(points, subset, action))
        for size in range(1, len(S) + 1)
        for subset in itertools.combinations(sorted(S), size)
    ]


def bridge_metric(U: Entourage) -> Optional[InvariantPseudoMetric]:
    """A rescaling d′ of U's metric with U = {d′(·, e) ≤ 1/2}, when one exists."""
    if U.radius > 0:
        return U.metric.scaled(1 / (2 * U.radius))
    if U.metric.integer_valued:
        return U.metric.unit()
    return None


def seminorm_bridge(certificate: FolnerCertificate) -> Optional[List[BridgeRow]]:
    """Check p(δ_F − gδ_F) against the bounds the matchings imply.

    With d′ as in ``bridge_metric``, a matching of size θ_g|F| between F and gF
    gives p_unit ≤ 1 − θ_g/2 for [0, 1]-valued test functions and
    p_d′ ≤ 2 − 3θ_g/2 for [−1, 1]-valued ones.
    """
    metric = bridge_metric(certificate.U)
    if metric is None:
        return None
    model = certificate.model
    base = FiniteWeight.uniform(model, certificate.F)
    rows = []
    for m in certificate.matchings:
        diff = base - base.translate(m.g)
        try:
            unit = seminorm_unit(diff, metric).value
            full = seminorm_pd(diff, metric).value
        except SupportTooLargeError:
            logger.warning("seminorm bridge skipped for g={}: support {} above the LP cap", m.g, len(diff))
            return None
        rows.append(BridgeRow(m.g, m.ratio, unit, full))
    return rows


@dataclass(frozen=True)
class SearchRow:
    candidate_id: int
    label: str
    size: int
    theta: Fraction
    passed: bool

    @property
    def seminorm_bound(self) -> Fraction:
        return 1 - self.theta / 2


@dataclass(frozen=True)
class FolnerSearchResult:
    found: bool
    certificate: Optional[FolnerCertificate]
    rows: Tuple[SearchRow, ...]
    reason: str

    @property
    def best_theta(self) -> Fraction:
        return self.certificate.theta if self.certificate is not None else ZERO

    @property
    def evaluated(self) -> int:
        return len(self.rows)


STRATEGIES = ("balls", "boxes", "grid", "local")


def _enumerate(model: GroupModel, strategy: str) -> Iterator[Tuple[str, FiniteWindow]]:
    if strategy == "balls":
        if not model.discrete:
            raise PreconditionError("balls strategy needs a finitely generated model")
        previous = -1
        for radius in itertools.count(1):
            ball = model.ball(radius)
            if len(ball) == previous:
                return
            previous = len(ball)
            yield f"ball({radius})", ball
    elif strategy == "boxes":
        if not isinstance(model, LatticeGroup):
            raise PreconditionError("boxes strategy needs a lattice model")
        for side in itertools.count(1):
            yield f"box({side})", model.box(side)
    elif strategy == "grid":
        if model.discrete:
            raise PreconditionError("grid strategy needs a circle or torus model")
        for resolution in itertools.count(1):
            yield f"grid({resolution})", model.grid(resolution)
    else:
        raise PreconditionError(f"unknown strategy {strategy!r}")


def folner_search(
    model: GroupModel,
    E: FiniteWindow,
    U: Entourage,
    theta_target: Fraction,
    strategy: str = "balls",
    budget: int = 500,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> FolnerSearchResult:
    """First candidate in enumeration order with θ ≥ target, or the best found.

    Candidates are evaluated in batches of the worker count; within a batch the
    earliest passing candidate wins, so the result does not depend on timing.
    """
    if budget <= 0:
        raise PreconditionError("budget must be positive")
    if strategy == "local":
        return _local_search(model, E, U, theta_target, budget, seed)

    rows: List[SearchRow] = []
    best: Optional[FolnerCertificate] = None
    candidates = _enumerate(model, strategy)
    batch_size = worker_count(workers)
    stopped: Optional[str] = None
    while len(rows) < budget and stopped is None:
        batch: List[Tuple[str, FiniteWindow]] = []
        while len(batch) < min(batch_size, budget - len(rows)):
            try:
                batch.append(next(candidates))
            except StopIteration:
                stopped = "candidates exhausted"
                break
            except WindowLimitError as e:
                logger.info("folner_search stops at the window cap: {}", e)
                stopped = "window limit reached"
                break
        certificates = map_ordered(lambda item: topological_defect(item[1], E, U, workers=1), batch, workers)
        for (label, F), cert in zip(batch, certificates):
            passed = cert.theta >= theta_target
            rows.append(SearchRow(len(rows), label, len(F), cert.theta, passed))
            logger.debug("candidate {} |F|={} theta={}", label, len(F), cert.theta)
            if best is None or cert.theta > best.theta:
                best = cert
            if passed:
                logger.info("folner_search: {} meets theta {} with {}", label, theta_target, cert.theta)
                return FolnerSearchResult(True, cert, tuple(rows), "target met")
    reason = stopped or "budget exhausted"
    logger.info("folner_search: target {} not met ({}), best theta {}", theta_target, reason, best.theta if best else None)
    return FolnerSearchResult(False, best, tuple(rows), reason)


def _local_search(model: GroupModel, E: FiniteWindow, U: Entourage, theta_target: Fraction, budget: int, seed: Optional[int]) -> FolnerSearchResult:
    rng = random.Random(seed) if seed is not None else None
    start = model.ball(1) if model.discrete else model.grid(2)
    steps = sorted(set(E) | set(model.symmetric_generators()) | {model.inv(g) for g in E})
    rows: List[SearchRow] = []

    def evaluate(label: str, F: FiniteWindow) -> FolnerCertificate:
        cert = topological_defect(F, E, U, workers=1)
        rows.append(SearchRow(len(rows), label, len(F), cert.theta, cert.theta >= theta_target))
        return cert

    current = evaluate("local(start)", start)
    step = 0
    while current.theta < theta_target and len(rows) < budget:
        F = current.F
        boundary = sorted({model.mul(s, x) for s in steps for x in F} - F.as_set())
        moves: List[FiniteWindow] = [FiniteWindow([*F, y]) for y in boundary]
        moves += [FiniteWindow([*(z for z in F if z != x), y]) for x in F for y in boundary]
        if rng is not None:
            rng.shuffle(moves)
        improved = None
        for candidate in moves:
            if len(rows) >= budget:
                break
            if len(candidate) > limits().window_cap:
                continue
            cert = evaluate(f"local({step})", candidate)
            if cert.theta > current.theta:
                improved = cert
                break
        if improved is None:
            break
        current = improved
        step += 1
    found = current.theta >= theta_target
    reason = "target met" if found else ("budget exhausted" if len(rows) >= budget else "no improving move")
    return FolnerSearchResult(found, current, tuple(rows), reason)


def matching_from_action(
    F: FiniteWindow,
    g: GroupElement,
    image: Dict[GroupElement, GroupElement],
    U: Entourage,
) -> MatchingResult:
    """Partial matching of B(F, gF, U) read off a perturbed translation.

    ``image`` is α(g) as a table. With D = F ∩ α(g)F the map
    x ↦ g·α(g)⁻¹(x) sends D injectively into gF, and stays within U of x
    whenever α(g) deviates from λ_g by at most U.
    """
    model = U.model
    inverse = {y: x for x, y in image.items()}
    gF = translate_window(g, F)
    pairing: Dict[int, int] = {}
    for i, x in enumerate(F):
        if x in inverse and inverse[x] in F:
            y = model.mul(g, inverse[x])
            if U.relates(x, y):
                pairing[i] = gF.index(y)
    return MatchingResult(pairing, len(pairing), (), (), len(F))
