"""Perturbed translation actions on finite windows.

An action α ∈ 𝒩_G(U) moves every h to a point within U of gh. The
constructions here are the finite shadows of the perturbation results: moving
injections, nice Følner packages, their assembly into involutive corrections
of the translation action, the finite-group perturbation of a precompact
model, and the piecewise-translation decomposition of wobbling permutations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from loguru import logger

from .config import limits
from .errors import BudgetExhaustedError, ConstructionError, NotWobblingError, PreconditionError, ResourceExhaustedError, SupplyExhaustedError
from .folner import conjugated_entourage, folner_search
from .groups import CyclicGroup, Entourage, FiniteWindow, GroupElement, GroupModel, TorusGroup, format_rational
from .matching import build_graph, perfect_matching
from .workers import map_ordered

ZERO = Fraction(0)

Table = Dict[GroupElement, GroupElement]


def moving_injection(
    F: FiniteWindow,
    E: Iterable[GroupElement],
    U: Entourage,
    supply: FiniteWindow,
    max_steps: Optional[int] = None,
) -> Table:
    """Injective φ: F → supply with φ(x) ∈ Ux and φ(F) ∩ gφ(F) = ∅ for g ∈ E∖{e}.

    Points of F are placed in canonical order. Candidates for x are the supply
    points within U of x, nearest first with ties in canonical order, and x
    itself last. A dead end backtracks to the previous point.
    """
    model = U.model
    if model.discrete:
        raise PreconditionError(f"moving injections need a non-discrete model, not {model.name}")
    e = model.identity()
    movers = [g for g in sorted(set(E)) if g != e]
    if not movers:
        return {x: x for x in F}
    inverses = [model.inv(g) for g in movers]
    points = list(F)

    def ranked(x: GroupElement) -> List[GroupElement]:
        near = [(U.metric(y, x), y) for y in supply if U.relates(x, y)]
        return [y for dist, y in sorted(near, key=lambda item: (item[0] == 0, item[0], item[1]))]

    candidates = [ranked(x) for x in points]
    chosen: List[GroupElement] = []
    taken: Set[GroupElement] = set()

    def fits(y: GroupElement) -> bool:
        if y in taken:
            return False
        for g, g_inv in zip(movers, inverses):
            gy = model.mul(g, y)
            if gy == y or gy in taken or model.mul(g_inv, y) in taken:
                return False
        return True

    cap = max_steps or limits().backtrack_steps
    cursor = [0] * len(points)
    steps = 0
    depth = 0
    while depth < len(points):
        options = candidates[depth]
        placed = False
        while cursor[depth] < len(options):
            y = options[cursor[depth]]
            cursor[depth] += 1
            steps += 1
            if steps > cap:
                raise BudgetExhaustedError(f"moving injection exceeded {cap} steps", {"steps": cap, "placed": len(chosen), "points": len(points)})
            if fits(y):
                chosen.append(y)
                taken.add(y)
                placed = True
                break
        if placed:
            depth += 1
            continue
        cursor[depth] = 0
        depth -= 1
        if depth < 0:
            raise SupplyExhaustedError(f"supply of {len(supply)} points cannot separate {len(points)} points under {len(movers)} translations")
        taken.discard(chosen.pop())
    return dict(zip(points, chosen))


@dataclass(frozen=True)
class FolnerPackage:
    """(F, D, {φ_g}) with D ⊆ F, F ∩ gF = ∅ and φ_g: D → gF moving points within U."""
    F: FiniteWindow
    D: FiniteWindow
    E: FiniteWindow
    phi: Dict[GroupElement, Table]
    theta: Fraction

    def footprint(self, model: GroupModel) -> Set[GroupElement]:
        """EF"""
        return {model.mul(g, x) for g in self.E for x in self.F}

    def shifted(self, model: GroupModel, z: GroupElement) -> "FolnerPackage":
        """Right translate by z; every package property is preserved."""
        move = lambda x: model.mul(x, z)
        return FolnerPackage(
            FiniteWindow(move(x) for x in self.F),
            FiniteWindow(move(x) for x in self.D),
            self.E,
            {g: {move(x): move(y) for x, y in table.items()} for g, table in self.phi.items()},
            self.theta,
        )

    def check(self, model: GroupModel, U: Entourage) -> Dict[str, bool]:
        e = model.identity()
        members = self.F.as_set()
        report = {
            "size": len(self.D) >= self.theta * len(self.F),
            "nested": self.D.as_set() <= members,
            "disjoint": all(not (members & {model.mul(g, x) for x in self.F}) for g in self.E if g != e),
            "injective": True,
            "close": True,
        }
        for g, table in self.phi.items():
            targets = {model.mul(g, x) for x in self.F}
            if set(table) != self.D.as_set() or len(set(table.values())) != len(table) or not set(table.values()) <= targets:
                report["injective"] = False
            if not all(U.relates(x, y) for x, y in table.items()):
                report["close"] = False
        return report

    def to_json(self) -> Dict[str, object]:
        return {
            "F": self.F.to_json(),
            "D": self.D.to_json(),
            "E": self.E.to_json(),
            "theta": format_rational(self.theta),
            "phi": {str(g): [[str(x), str(y)] for x, y in sorted(table.items())] for g, table in sorted(self.phi.items())},
        }


def _resolution(model: GroupModel, elements: Iterable[GroupElement]) -> int:
    return math.lcm(1, *(model.resolution(g) for g in elements))


def nice_folner_package(
    theta: Fraction,
    E: Iterable[GroupElement],
    U: Entourage,
    budget: int = 500,
    max_refinement: int = 12,
) -> FolnerPackage:
    """Følner package with pairwise disjoint translates and U-close injections.

    Runs the grid search at the boosted level 1 − (1 − θ)/|E| for the ball of
    radius r/3 (shrunk for conjugation), relocates the Følner set with a moving
    injection into a finer grid, and keeps the points matched for every g.
    """
    model = U.model
    e = model.identity()
    E_sym = FiniteWindow({*E, *(model.inv(g) for g in E), e})
    if len(E_sym) == 1:
        F = FiniteWindow([e])
        return FolnerPackage(F, F, E_sym, {}, theta)
    if model.discrete:
        raise PreconditionError(f"nice Følner packages need a non-discrete model, not {model.name}")

    V = U.with_radius(U.radius / 3)
    W = conjugated_entourage(E_sym, V)
    boosted = 1 - (1 - theta) / len(E_sym)
    search = folner_search(model, E_sym, V, boosted, strategy="grid", budget=budget, workers=1)
    if not search.found:
        raise BudgetExhaustedError(
            f"no grid reaches theta {boosted} for radius {V.radius} within budget {budget}",
            {"target_theta": format_rational(boosted), "best_theta": format_rational(search.best_theta), "evaluated": search.evaluated},
        )
    cert = search.certificate
    F0 = cert.F

    base = _resolution(model, [*F0, *E_sym])
    for factor in range(2, max_refinement + 1):
        try:
            alpha = moving_injection(F0, E_sym, W, model.grid(base * factor))
            break
        except SupplyExhaustedError:
            logger.debug("supply grid 1/{} too coarse, refining", base * factor)
    else:
        raise SupplyExhaustedError(f"no supply grid up to 1/{base * max_refinement} separates the package")
    alpha_inv = {y: x for x, y in alpha.items()}

    D = set(alpha.values())
    matched: Dict[GroupElement, Table] = {}
    for m in cert.matchings:
        pairs = {F0[i]: m.translate[j] for i, j in m.result.pairing.items()}
        matched[m.g] = pairs
        D &= {alpha[x] for x in pairs}

    phi: Dict[GroupElement, Table] = {}
    for g in E_sym:
        g_inv = model.inv(g)
        phi[g] = {x: model.mul(g, alpha[model.mul(g_inv, matched[g][alpha_inv[x]])]) for x in sorted(D)}

    package = FolnerPackage(FiniteWindow(alpha.values()), FiniteWindow(D), E_sym, phi, theta)
    report = package.check(model, U)
    if not all(report.values()):
        raise ConstructionError(f"package failed its own checks: {report}")
    logger.info("nice package: |F|={} |D|={} for theta {}", len(package.F), len(package.D), theta)
    return package


@dataclass(frozen=True)
class PerturbedAction:
    model: GroupModel
    window: FiniteWindow
    pool: FiniteWindow
    rows: Dict[GroupElement, Table]
    radius: Fraction
    packages: Tuple[FolnerPackage, ...] = ()

    def apply(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return self.rows[g][h]

    def psi(self, g: GroupElement) -> Table:
        """ψ(g) = α(g)∘λ_g⁻¹ on the points where it is defined."""
        return {self.model.mul(g, h): y for h, y in self.rows[g].items()}

    def is_involution(self, g: GroupElement) -> bool:
        psi = self.psi(g)
        return all(psi.get(y) == x for x, y in psi.items())

    @property
    def involutions(self) -> Dict[GroupElement, bool]:
        return {g: self.is_involution(g) for g in self.pool}

    def with_entry(self, g: GroupElement, h: GroupElement, image: GroupElement) -> "PerturbedAction":
        rows = {k: dict(v) for k, v in self.rows.items()}
        rows[g][h] = image
        return PerturbedAction(self.model, self.window, self.pool, rows, self.radius, self.packages)

    @classmethod
    def translations(cls, model: GroupModel, window: FiniteWindow, pool: FiniteWindow, radius: Fraction = ZERO) -> "PerturbedAction":
        """λ restricted to the window; rows are partial where gh leaves it."""
        rows = {g: {h: model.mul(g, h) for h in window if model.mul(g, h) in window} for g in pool}
        return cls(model, window, pool, rows, radius)

    def to_json(self) -> Dict[str, object]:
        return {
            "window": self.window.to_json(),
            "pool": self.pool.to_json(),
            "rows": {
                str(g): [self.window.index(self.rows[g][h]) if h in self.rows[g] and self.rows[g][h] in self.window else None for h in self.window]
                for g in self.pool
            },
            "radius": format_rational(self.radius),
        }

    @classmethod
    def from_json(cls, model: GroupModel, payload: Mapping[str, object]) -> "PerturbedAction":
        window = FiniteWindow.parse(model, payload["window"])
        pool = FiniteWindow.parse(model, payload["pool"])
        rows: Dict[GroupElement, Table] = {}
        for text, images in payload["rows"].items():
            g = model.parse(text)
            rows[g] = {h: window[i] for h, i in zip(window, images) if i is not None}
        return cls(model, window, pool, rows, Fraction(str(payload["radius"])))


@dataclass(frozen=True)
class Violation:
    g: GroupElement
    h: GroupElement
    image: GroupElement
    distance: Fraction


@dataclass(frozen=True)
class RosenblattRow:
    package: int
    size: int
    image_size: int
    bound: Fraction

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.image_size, self.size)

    @property
    def passed(self) -> bool:
        return self.ratio <= self.bound


@dataclass(frozen=True)
class PerturbationReport:
    checked: int
    violations: Tuple[Violation, ...]
    non_injective: Tuple[GroupElement, ...]
    rosenblatt: Tuple[RosenblattRow, ...]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.non_injective and all(r.passed for r in self.rosenblatt)


def verify_perturbation(alpha: PerturbedAction, U: Entourage, workers: Optional[int] = None) -> PerturbationReport:
    """Exact 𝒩_G(U) check of every table entry, plus action defects on stored packages."""
    model = alpha.model

    def check_row(g: GroupElement) -> Tuple[List[Violation], bool]:
        row = alpha.rows.get(g, {})
        found = []
        for h, image in row.items():
            distance = U.metric(image, model.mul(g, h))
            if distance > U.radius:
                found.append(Violation(g, h, image, distance))
        return found, len(set(row.values())) == len(row)

    results = map_ordered(check_row, list(alpha.pool), workers)
    violations = tuple(v for found, _ in results for v in found)
    non_injective = tuple(g for g, (_, injective) in zip(alpha.pool, results) if not injective)
    checked = sum(len(alpha.rows.get(g, {})) for g in alpha.pool)

    rosenblatt = []
    for index, package in enumerate(alpha.packages):
        n = len(package.F)
        image = {alpha.rows[g][x] for g in package.E if g in alpha.rows for x in package.F if x in alpha.rows[g]}
        bound = 1 + (len(package.E) - 1) * (1 - package.theta)
        rosenblatt.append(RosenblattRow(index, n, len(image), bound))
    if violations:
        logger.warning("perturbation has {} deviation violations", len(violations))
    return PerturbationReport(checked, violations, non_injective, tuple(rosenblatt))


def _require_grid_model(model: GroupModel) -> None:
    if not isinstance(model, (TorusGroup, CyclicGroup)):
        raise PreconditionError(f"{model.name} is not a circle, torus or cyclic model")


def build_perturbation(
    family: Sequence[Tuple[Iterable[GroupElement], int]],
    U: Entourage,
    budget: int = 500,
) -> PerturbedAction:
    """Assemble α(g) = ψ(g)∘λ_g from one nice package per index (E_i, n_i).

    Packages are shifted apart on successively finer grids until the sets
    E_iF_i are pairwise disjoint; ψ(g) swaps x ∈ D_i with φ_{i,g}(x) and fixes
    everything else, so it is an involution.
    """
    model = U.model
    _require_grid_model(model)
    e = model.identity()
    packages = []
    pool_elements: Set[GroupElement] = set()
    for E_i, n_i in family:
        E_i = FiniteWindow(E_i)
        if e not in E_i:
            raise PreconditionError("every index set must contain the identity")
        if n_i < 1:
            raise PreconditionError("n_i must be a positive integer")
        try:
            packages.append(nice_folner_package(1 - Fraction(1, n_i), E_i, U, budget))
        except ResourceExhaustedError as e:
            e.partial.update(index=len(packages), packages=[p.to_json() for p in packages])
            raise
        pool_elements |= set(E_i)

    resolution = _resolution(model, [*pool_elements, *(x for p in packages for x in p.F), *(y for p in packages for t in p.phi.values() for y in t.values())])
    placed: List[FolnerPackage] = []
    occupied: Set[GroupElement] = set()
    cap = limits().window_cap
    for package in packages:
        footprint = package.footprint(model)
        shifted = None
        for factor in itertools.count(1):
            grid_resolution = resolution * factor
            if grid_resolution ** len(e.data) > cap:
                raise ConstructionError("cannot separate packages within the window bound")
            for z in model.grid(grid_resolution):
                if not occupied & {model.mul(x, z) for x in footprint}:
                    shifted = package.shifted(model, z)
                    break
            if shifted is not None:
                resolution = grid_resolution
                break
        placed.append(shifted)
        occupied |= shifted.footprint(model)

    window = model.grid(resolution)
    pool = FiniteWindow(pool_elements)
    rows: Dict[GroupElement, Table] = {}
    for g in pool:
        psi = {w: w for w in window}
        if g != e:
            for package in placed:
                if g in package.E:
                    for x, y in package.phi[g].items():
                        psi[x] = y
                        psi[y] = x
        rows[g] = {h: psi[model.mul(g, h)] for h in window}
    logger.info("build_perturbation: {} packages on the 1/{} grid", len(placed), resolution)
    return PerturbedAction(model, window, pool, rows, U.radius, tuple(placed))


@dataclass(frozen=True)
class PrecompactResult:
    action: PerturbedAction
    F: FiniteWindow
    spacing: int
    gamma: Dict[GroupElement, Tuple[int, ...]]
    group_order: Optional[int]

    @property
    def order_divides_factorial(self) -> Optional[bool]:
        if self.group_order is None:
            return None
        return math.factorial(len(self.F)) % self.group_order == 0


def _divisors(n: int) -> List[int]:
    return [s for s in range(1, n + 1) if n % s == 0]


def _full_grid(model: GroupModel, window: FiniteWindow) -> int:
    if isinstance(model, CyclicGroup):
        resolution = model.modulus
        full = FiniteWindow(model.element((r,)) for r in range(resolution))
    else:
        resolution = _resolution(model, window)
        full = model.grid(resolution)
    if full != window:
        raise PreconditionError("precompact construction needs the full grid of the window's resolution")
    return resolution


def permutation_closure(generators: Iterable[Tuple[int, ...]], cap: int = 400_000) -> int:
    """Order of the permutation group generated by ``generators``."""
    generators = [tuple(p) for p in generators]
    if not generators:
        return 1
    identity = tuple(range(len(generators[0])))
    seen = {identity}
    frontier = [identity]
    while frontier:
        next_frontier = []
        for p in frontier:
            for q in generators:
                r = tuple(q[i] for i in p)
                if r not in seen:
                    seen.add(r)
                    next_frontier.append(r)
        if len(seen) > cap:
            raise BudgetExhaustedError(f"group closure exceeded {cap} elements", {"closure_size": len(seen)})
        frontier = next_frontier
    return len(seen)


def precompact_perturbation(
    U: Entourage,
    window: FiniteWindow,
    pool: Optional[Iterable[GroupElement]] = None,
) -> PrecompactResult:
    """Perturbation of the translations generating a finite group.

    The net F is the finest grid subgroup whose points are more than r/3
    apart; its cells (one per point, equal size) lie within r/3 of their
    centre, so F is a maximal r/3-separated set. Equal cells make the rigid
    lift a permutation, so the window resolution must have a divisor s with
    both properties; otherwise ConstructionError is raised (on the circle with
    r = 7/20, grid(60) qualifies and grid(13) does not). Each g gets a perfect
    matching φ_g: F → gF inside the r/3 ball, γ(g) = φ_g⁻¹∘λ_g permutes F,
    and α(g) moves every cell rigidly onto the cell of γ(g)(centre).
    """
    model = U.model
    _require_grid_model(model)
    if not len(window):
        raise PreconditionError("empty window")
    if U.radius <= 0:
        raise PreconditionError("precompact construction needs a positive radius")
    resolution = _full_grid(model, window)
    V = U.with_radius(U.radius / 3)
    dimension = len(model.identity().data)

    spacing = None
    for s in _divisors(resolution):
        count = resolution // s
        others = [model.from_grid([s * c for c in cell], resolution) for cell in itertools.product(range(count), repeat=dimension) if any(cell)]
        if all(V.metric.norm(p) > V.radius for p in others):
            spacing = s
            break
    half = spacing // 2
    offsets = [model.from_grid(o, resolution) for o in itertools.product(range(-half, spacing - half), repeat=dimension)]
    if any(V.metric.norm(o) > V.radius for o in offsets):
        raise ConstructionError(f"the 1/{resolution} grid admits no balanced r/3-net")

    count = resolution // spacing
    F = FiniteWindow(model.from_grid([spacing * c for c in cell], resolution) for cell in itertools.product(range(count), repeat=dimension))

    def project(x: GroupElement) -> Tuple[GroupElement, GroupElement]:
        coords = model.to_grid(x, resolution)
        cell = [((c + half) // spacing) % count for c in coords]
        centre = model.from_grid([spacing * c for c in cell], resolution)
        return centre, model.mul(x, model.inv(centre))

    projection = {x: project(x) for x in window}
    pool = FiniteWindow(pool) if pool is not None else window

    rows: Dict[GroupElement, Table] = {}
    gamma: Dict[GroupElement, Tuple[int, ...]] = {}
    for g in pool:
        instance = build_graph(F, FiniteWindow(model.mul(g, p) for p in F), V, workers=1)
        matching = perfect_matching(instance)
        if not matching.exists:
            raise ConstructionError(f"no perfect matching F → {g}F; Hall fails on {[str(F[i]) for i in matching.violator]}")
        back = {instance.right[j]: F[i] for i, j in matching.pairing.items()}
        step = {p: back[model.mul(g, p)] for p in F}
        gamma[g] = tuple(F.index(step[p]) for p in F)
        rows[g] = {x: model.mul(offset, step[centre]) for x, (centre, offset) in projection.items()}

    action = PerturbedAction(model, window, pool, rows, U.radius)
    order = None
    if len(F) <= limits().closure_points_cap:
        order = permutation_closure(tuple(window.index(rows[g][x]) for x in window) for g in pool)
    else:
        logger.warning("skipping group closure: |F| = {} above the cap", len(F))
    logger.info("precompact: |F|={} spacing 1/{} order {}", len(F), Fraction(spacing, resolution).denominator, order)
    return PrecompactResult(action, F, spacing, gamma, order)


def precompact_cover_witness(alpha: PerturbedAction, U: Entourage) -> Tuple[FiniteWindow, bool]:
    """F = {α(g)(e)}: every pool element lies in U·F when α ∈ 𝒩_G(U)."""
    e = alpha.model.identity()
    F = FiniteWindow(alpha.rows[g][e] for g in alpha.pool if e in alpha.rows[g])
    covered = all(any(U.relates(y, g) for y in F) for g in alpha.pool)
    return F, covered


@dataclass(frozen=True)
class WobblingElement:
    permutation: Table
    window: FiniteWindow
    pieces: Dict[GroupElement, FiniteWindow]

    def reapply(self, action: Callable[[GroupElement, GroupElement], GroupElement]) -> Table:
        return {x: action(g, x) for g, piece in self.pieces.items() for x in piece}

    def pushforward(self, weight: Mapping[GroupElement, Fraction]) -> Dict[GroupElement, Fraction]:
        """(γ_* a)(y) = a(γ⁻¹ y)"""
        inverse = {y: x for x, y in self.permutation.items()}
        return {y: weight.get(inverse[y], ZERO) for y in self.window}


def decompose_wobbling(
    gamma: Mapping[GroupElement, GroupElement],
    pool: Iterable[GroupElement],
    action: Callable[[GroupElement, GroupElement], GroupElement],
) -> WobblingElement:
    """Split γ into pieces on which it is a single translation from the pool."""
    window = FiniteWindow(gamma)
    if set(gamma.values()) != window.as_set():
        raise PreconditionError("γ must be a permutation of its window")
    pool = sorted(set(pool))
    assignment: Dict[GroupElement, List[GroupElement]] = {}
    for x in window:
        translator = next((g for g in pool if action(g, x) == gamma[x]), None)
        if translator is None:
            raise NotWobblingError(f"no pool element moves {x} to {gamma[x]}", witness=x)
        assignment.setdefault(translator, []).append(x)
    pieces = {g: FiniteWindow(xs) for g, xs in sorted(assignment.items())}
    return WobblingElement(dict(gamma), window, pieces)


def wobbling_mean_check(wobbling: WobblingElement, weight: Mapping[GroupElement, Fraction]) -> bool:
    """γ_* a = a for a weight constant on the window γ permutes."""
    if set(weight) - wobbling.window.as_set():
        raise PreconditionError("weight support must lie in the wobbling window")
    pushed = wobbling.pushforward(weight)
    return all(pushed[y] == weight.get(y, ZERO) for y in wobbling.window)
