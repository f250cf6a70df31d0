"""Exact group models, invariant pseudo-metrics, entourages and finite windows.

Every built-in group is presented by a canonical element encoding so that
equality is tuple equality and the canonical order is a plain sort. All
arithmetic is integer or ``Fraction``; nothing here ever touches a float.
"""

from __future__ import annotations

import itertools
import math
import threading
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Annotated, Any, ClassVar, Dict, Iterable, Iterator, List, Literal, Optional, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator

from .config import limits
from .errors import ElementParseError, ModelMismatchError, PreconditionError, WindowLimitError

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_rational(value: Any) -> Fraction:
    """Parse an exact rational from "p/q", a decimal string or an integer.

    Floats are refused: every rational that enters the workbench must be exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ElementParseError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ElementParseError(f"not an exact rational: {value!r}")
    raise ElementParseError(f"rationals must be strings like '3/4', got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    return str(value)


def _validate_rational(value: Any) -> Fraction:
    try:
        return parse_rational(value)
    except ElementParseError as e:
        raise ValueError(str(e))


Rational = Annotated[Fraction, PlainValidator(_validate_rational), PlainSerializer(format_rational, return_type=str)]


@dataclass(frozen=True, order=True)
class GroupElement:
    """Model-tagged canonical element; sorts in canonical order within its model."""
    model: str
    key: tuple = field(repr=False)
    data: tuple

    def __str__(self) -> str:
        return _REGISTRY[self.model].format(self)


_REGISTRY: Dict[str, "GroupModel"] = {}


class GroupModel(ABC):
    kind: ClassVar[str]
    discrete: ClassVar[bool] = True
    abelian: ClassVar[bool] = True
    default_rule: ClassVar[str] = "word"

    def __init__(self, generators: Optional[Sequence[GroupElement]] = None, rule: Optional[str] = None, scale: Fraction = ONE):
        _REGISTRY.setdefault(self.name, self)
        standard = self.standard_generators()
        self.generators: List[GroupElement] = list(generators) if generators is not None else standard
        for g in self.generators:
            self.check(g)
        self.standard = sorted(self.generators) == sorted(standard)
        self.metric = InvariantPseudoMetric(self, rule or self.default_rule, scale)
        self._distances: Dict[GroupElement, int] = {}
        self._frontier: List[GroupElement] = []
        self._lock = threading.Lock()

    # element plumbing

    @property
    @abstractmethod
    def name(self) -> str:
        ...

    @abstractmethod
    def _canonical(self, data: tuple) -> tuple:
        ...

    def _key(self, data: tuple) -> tuple:
        return data

    def element(self, data: Iterable[Any]) -> GroupElement:
        data = self._canonical(tuple(data))
        return GroupElement(self.name, self._key(data), data)

    @abstractmethod
    def identity(self) -> GroupElement:
        ...

    @abstractmethod
    def _mul(self, a: tuple, b: tuple) -> tuple:
        ...

    @abstractmethod
    def _inv(self, a: tuple) -> tuple:
        ...

    @abstractmethod
    def parse(self, text: str) -> GroupElement:
        ...

    @abstractmethod
    def format(self, g: GroupElement) -> str:
        ...

    def standard_generators(self) -> List[GroupElement]:
        return []

    def params(self) -> Dict[str, int]:
        return {}

    def check(self, *elements: GroupElement) -> None:
        for g in elements:
            if g.model != self.name:
                raise ModelMismatchError(f"element of {g.model} used with {self.name}")

    def mul(self, g: GroupElement, h: GroupElement) -> GroupElement:
        self.check(g, h)
        data = self._mul(g.data, h.data)
        return GroupElement(self.name, self._key(data), data)

    def inv(self, g: GroupElement) -> GroupElement:
        self.check(g)
        data = self._inv(g.data)
        return GroupElement(self.name, self._key(data), data)

    def is_identity(self, g: GroupElement) -> bool:
        return g == self.identity()

    def parse_many(self, texts: Iterable[str]) -> List[GroupElement]:
        return [self.parse(t) for t in texts]

    def symmetric_generators(self) -> List[GroupElement]:
        """S ∪ S⁻¹ without the identity, in canonical order."""
        closed = {g for g in self.generators} | {self.inv(g) for g in self.generators}
        closed.discard(self.identity())
        return sorted(closed)

    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.params(),
            "generators": [str(g) for g in self.generators],
            "metric": self.metric.descriptor(),
        }

    # word metric support

    def word_length(self, g: GroupElement) -> int:
        """Word length over the symmetric closure of the generators."""
        if not self.discrete:
            raise PreconditionError(f"{self.name} has no word metric")
        fast = self._standard_length(g) if self.standard else None
        if fast is not None:
            return fast
        return self._bfs_length(g)

    def _standard_length(self, g: GroupElement) -> Optional[int]:
        return None

    def _bfs_length(self, g: GroupElement) -> int:
        with self._lock:
            if not self._distances:
                e = self.identity()
                self._distances[e] = 0
                self._frontier = [e]
            steps = self.symmetric_generators()
            cap = limits().window_cap
            while g not in self._distances:
                if not self._frontier:
                    raise PreconditionError(f"{g} is not generated by {[str(s) for s in self.generators]}")
                next_frontier = []
                for x in self._frontier:
                    depth = self._distances[x] + 1
                    for s in steps:
                        y = self.mul(s, x)
                        if y not in self._distances:
                            self._distances[y] = depth
                            next_frontier.append(y)
                if len(self._distances) > cap:
                    raise WindowLimitError(f"word length search in {self.name} exceeded {cap} elements")
                self._frontier = next_frontier
            return self._distances[g]

    def ball(self, radius: int) -> "FiniteWindow":
        """Word ball of the given integer radius, by breadth-first search."""
        cap = limits().window_cap
        seen = {self.identity()}
        layer = [self.identity()]
        steps = self.symmetric_generators()
        for _ in range(radius):
            next_layer = []
            for x in layer:
                for s in steps:
                    y = self.mul(s, x)
                    if y not in seen:
                        seen.add(y)
                        next_layer.append(y)
                        if len(seen) > cap:
                            raise WindowLimitError(f"ball of radius {radius} in {self.name} exceeds {cap} elements")
            if not next_layer:
                break
            layer = next_layer
        return FiniteWindow(seen)

    def generated_subgroup(self, elements: Iterable[GroupElement]) -> "FiniteWindow":
        """Closure of ``elements`` under products; only terminates for finite models."""
        cap = limits().window_cap
        gens = list(elements)
        seen = {self.identity()}
        frontier = [self.identity()]
        while frontier:
            next_frontier = []
            for x in frontier:
                for s in gens:
                    y = self.mul(s, x)
                    if y not in seen:
                        seen.add(y)
                        next_frontier.append(y)
            if len(seen) > cap:
                raise WindowLimitError(f"subgroup closure in {self.name} exceeds {cap} elements")
            frontier = next_frontier
        return FiniteWindow(seen)

    def grid(self, resolution: int) -> "FiniteWindow":
        return self.ball(resolution)


class LatticeGroup(GroupModel):
    kind = "lattice"

    def __init__(self, dimension: int = 1, **kwargs):
        if dimension < 1:
            raise PreconditionError("lattice dimension must be positive")
        self.dimension = dimension
        super().__init__(**kwargs)

    @property
    def name(self) -> str:
        return f"lattice({self.dimension})"

    def params(self) -> Dict[str, int]:
        return {"dimension": self.dimension}

    def _canonical(self, data: tuple) -> tuple:
        if len(data) != self.dimension:
            raise ElementParseError(f"expected {self.dimension} coordinates, got {len(data)}")
        return tuple(int(x) for x in data)

    def identity(self) -> GroupElement:
        return self.element((0,) * self.dimension)

    def _mul(self, a: tuple, b: tuple) -> tuple:
        return tuple(x + y for x, y in zip(a, b))

    def _inv(self, a: tuple) -> tuple:
        return tuple(-x for x in a)

    def parse(self, text: str) -> GroupElement:
        try:
            return self.element(int(part) for part in str(text).split(","))
        except ValueError:
            raise ElementParseError(f"bad lattice element {text!r}")

    def format(self, g: GroupElement) -> str:
        return ",".join(str(x) for x in g.data)

    def standard_generators(self) -> List[GroupElement]:
        return [self.element(1 if j == i else 0 for j in range(self.dimension)) for i in range(self.dimension)]

    def _standard_length(self, g: GroupElement) -> Optional[int]:
        return sum(abs(x) for x in g.data)

    def box(self, side: int) -> "FiniteWindow":
        """The box {0, …, side−1}^d."""
        count = side ** self.dimension
        if count > limits().window_cap:
            raise WindowLimitError(f"box of side {side} exceeds the window cap")
        return FiniteWindow(self.element(p) for p in itertools.product(range(side), repeat=self.dimension))


class FreeGroup(GroupModel):
    """Free group on ``rank`` letters; a word is a tuple of ±(letter index + 1).

    Letters skip "e", which always spells the identity.
    """
    kind = "free"
    abelian = False
    ALPHABET = "abcdfghijklmnopqrstuvwxyz"

    def __init__(self, rank: int = 2, **kwargs):
        if not 1 <= rank <= len(self.ALPHABET):
            raise PreconditionError(f"free group rank must be between 1 and {len(self.ALPHABET)}")
        self.rank = rank
        super().__init__(**kwargs)

    @property
    def name(self) -> str:
        return f"free({self.rank})"

    def params(self) -> Dict[str, int]:
        return {"rank": self.rank}

    @staticmethod
    def _reduce(word: Iterable[int]) -> tuple:
        out: List[int] = []
        for letter in word:
            if out and out[-1] == -letter:
                out.pop()
            else:
                out.append(letter)
        return tuple(out)

    def _canonical(self, data: tuple) -> tuple:
        for letter in data:
            if letter == 0 or abs(letter) > self.rank:
                raise ElementParseError(f"letter {letter} outside rank {self.rank}")
        return self._reduce(data)

    def _key(self, data: tuple) -> tuple:
        return (len(data), tuple(2 * abs(x) - (1 if x > 0 else 0) for x in data))

    def identity(self) -> GroupElement:
        return self.element(())

    def _mul(self, a: tuple, b: tuple) -> tuple:
        i = 0
        while i < len(a) and i < len(b) and a[-1 - i] == -b[i]:
            i += 1
        return a[: len(a) - i] + b[i:]

    def _inv(self, a: tuple) -> tuple:
        return tuple(-x for x in reversed(a))

    def letter(self, symbol: str) -> int:
        index = self.ALPHABET.find(symbol.lower()) + 1
        if len(symbol) != 1 or not symbol.isalpha() or not 1 <= index <= self.rank:
            raise ElementParseError(f"unknown letter {symbol!r} for {self.name}")
        return index if symbol.islower() else -index

    def parse(self, text: str) -> GroupElement:
        text = str(text).replace(",", "").replace(" ", "")
        if text in ("", "e"):
            return self.identity()
        return self.element(self.letter(ch) for ch in text)

    @classmethod
    def symbol(cls, letter: int) -> str:
        ch = cls.ALPHABET[abs(letter) - 1]
        return ch if letter > 0 else ch.upper()

    def format(self, g: GroupElement) -> str:
        return ",".join(self.symbol(x) for x in g.data) if g.data else "e"

    def standard_generators(self) -> List[GroupElement]:
        return [self.element((i,)) for i in range(1, self.rank + 1)]

    def _standard_length(self, g: GroupElement) -> Optional[int]:
        return len(g.data)


class HeisenbergGroup(GroupModel):
    """Integer Heisenberg group, (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')."""
    kind = "heisenberg"
    abelian = False

    @property
    def name(self) -> str:
        return "heisenberg"

    def _canonical(self, data: tuple) -> tuple:
        if len(data) != 3:
            raise ElementParseError("Heisenberg elements are integer triples")
        return tuple(int(x) for x in data)

    def identity(self) -> GroupElement:
        return self.element((0, 0, 0))

    def _mul(self, a: tuple, b: tuple) -> tuple:
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def _inv(self, a: tuple) -> tuple:
        return (-a[0], -a[1], -a[2] + a[0] * a[1])

    def parse(self, text: str) -> GroupElement:
        try:
            return self.element(int(part) for part in str(text).split(","))
        except ValueError:
            raise ElementParseError(f"bad Heisenberg element {text!r}")

    def format(self, g: GroupElement) -> str:
        return ",".join(str(x) for x in g.data)

    def standard_generators(self) -> List[GroupElement]:
        return [self.element((1, 0, 0)), self.element((0, 1, 0))]


class TorusGroup(GroupModel):
    """(ℚ/ℤ)^d inside the torus, coordinates kept in [0, 1) in lowest terms."""
    kind = "torus"
    discrete = False
    default_rule = "arc"

    def __init__(self, dimension: int = 2, **kwargs):
        if dimension < 1:
            raise PreconditionError("torus dimension must be positive")
        self.dimension = dimension
        super().__init__(**kwargs)

    @property
    def name(self) -> str:
        return f"torus({self.dimension})"

    def params(self) -> Dict[str, int]:
        return {"dimension": self.dimension}

    def _canonical(self, data: tuple) -> tuple:
        if len(data) != self.dimension:
            raise ElementParseError(f"expected {self.dimension} coordinates, got {len(data)}")
        return tuple(Fraction(x) % 1 for x in data)

    def identity(self) -> GroupElement:
        return self.element((ZERO,) * self.dimension)

    def _mul(self, a: tuple, b: tuple) -> tuple:
        return tuple((x + y) % 1 for x, y in zip(a, b))

    def _inv(self, a: tuple) -> tuple:
        return tuple((-x) % 1 for x in a)

    def parse(self, text: str) -> GroupElement:
        return self.element(parse_rational(part) for part in str(text).split(","))

    def format(self, g: GroupElement) -> str:
        return ",".join(format_rational(x) for x in g.data)

    def arc_norm(self, g: GroupElement) -> Fraction:
        return max(min(x, 1 - x) for x in g.data)

    def resolution(self, g: GroupElement) -> int:
        """Smallest N with every coordinate in (1/N)ℤ."""
        return math.lcm(*(x.denominator for x in g.data))

    def to_grid(self, g: GroupElement, resolution: int) -> Tuple[int, ...]:
        coords = tuple(x * resolution for x in g.data)
        if any(c.denominator != 1 for c in coords):
            raise PreconditionError(f"{g} is not on the 1/{resolution} grid")
        return tuple(int(c) for c in coords)

    def from_grid(self, coords: Iterable[int], resolution: int) -> GroupElement:
        return self.element(Fraction(c, resolution) for c in coords)

    def grid(self, resolution: int) -> "FiniteWindow":
        if resolution < 1:
            raise PreconditionError("grid resolution must be at least 1")
        if resolution ** self.dimension > limits().window_cap:
            raise WindowLimitError(f"grid 1/{resolution} in {self.name} exceeds the window cap")
        return FiniteWindow(self.from_grid(p, resolution) for p in itertools.product(range(resolution), repeat=self.dimension))


class CircleGroup(TorusGroup):
    kind = "circle"

    def __init__(self, **kwargs):
        super().__init__(dimension=1, **kwargs)

    @property
    def name(self) -> str:
        return "circle"

    def params(self) -> Dict[str, int]:
        return {}


class CyclicGroup(GroupModel):
    kind = "cyclic"

    def __init__(self, modulus: int = 2, **kwargs):
        if modulus < 1:
            raise PreconditionError("modulus must be positive")
        self.modulus = modulus
        super().__init__(**kwargs)

    @property
    def name(self) -> str:
        return f"cyclic({self.modulus})"

    def params(self) -> Dict[str, int]:
        return {"modulus": self.modulus}

    def _canonical(self, data: tuple) -> tuple:
        if len(data) != 1:
            raise ElementParseError("cyclic elements are single residues")
        return (int(data[0]) % self.modulus,)

    def identity(self) -> GroupElement:
        return self.element((0,))

    def _mul(self, a: tuple, b: tuple) -> tuple:
        return ((a[0] + b[0]) % self.modulus,)

    def _inv(self, a: tuple) -> tuple:
        return ((-a[0]) % self.modulus,)

    def parse(self, text: str) -> GroupElement:
        try:
            return self.element((int(str(text)),))
        except ValueError:
            raise ElementParseError(f"bad residue {text!r}")

    def format(self, g: GroupElement) -> str:
        return str(g.data[0])

    def standard_generators(self) -> List[GroupElement]:
        return [self.element((1,))] if self.modulus > 1 else []

    def _standard_length(self, g: GroupElement) -> Optional[int]:
        r = g.data[0]
        return min(r, self.modulus - r)

    def to_grid(self, g: GroupElement, resolution: int) -> Tuple[int, ...]:
        return g.data

    def from_grid(self, coords: Iterable[int], resolution: int) -> GroupElement:
        return self.element(tuple(coords))

    def resolution(self, g: GroupElement) -> int:
        return self.modulus


class InvariantPseudoMetric:
    """Right-invariant pseudo-metric d(x, y) = scale · N(xy⁻¹).

    ``N`` is word length over the model's generators (rule "word"), the
    componentwise-max arc length on circle and torus (rule "arc"), or the
    {0, 1} indicator of non-identity (rule "discrete").
    """

    RULES = ("word", "arc", "discrete")

    def __init__(self, model: GroupModel, rule: str = "word", scale: Fraction = ONE):
        if rule not in self.RULES:
            raise PreconditionError(f"unknown metric rule {rule!r}")
        if rule == "arc" and model.discrete:
            raise PreconditionError(f"arc metric needs a circle or torus, not {model.name}")
        if rule == "word" and not model.discrete:
            raise PreconditionError(f"word metric needs a finitely generated model, not {model.name}")
        scale = parse_rational(scale)
        if scale <= 0:
            raise PreconditionError("metric scale must be positive")
        self.model = model
        self.rule = rule
        self.scale = scale

    @property
    def bi_invariant(self) -> bool:
        return self.rule != "word" or self.model.abelian

    @property
    def integer_valued(self) -> bool:
        return self.rule in ("word", "discrete")

    def norm(self, g: GroupElement) -> Fraction:
        """d(g, e)"""
        if self.rule == "word":
            base = Fraction(self.model.word_length(g))
        elif self.rule == "arc":
            base = self.model.arc_norm(g)
        else:
            base = ZERO if self.model.is_identity(g) else ONE
        return self.scale * base

    def __call__(self, x: GroupElement, y: GroupElement) -> Fraction:
        return self.norm(self.model.mul(x, self.model.inv(y)))

    def scaled(self, factor: Fraction) -> "InvariantPseudoMetric":
        return InvariantPseudoMetric(self.model, self.rule, self.scale * factor)

    def unit(self) -> "InvariantPseudoMetric":
        return InvariantPseudoMetric(self.model, self.rule, ONE)

    def descriptor(self) -> Dict[str, str]:
        return {"rule": self.rule, "scale": format_rational(self.scale)}

    def __repr__(self) -> str:
        return f"InvariantPseudoMetric({self.model.name}, {self.rule}, scale={self.scale})"


def metric_eval(d: InvariantPseudoMetric, x: GroupElement, y: GroupElement) -> Fraction:
    return d(x, y)


@dataclass(frozen=True)
class Entourage:
    """Closed ball U = {g : d(g, e) ≤ radius}."""
    metric: InvariantPseudoMetric
    radius: Fraction

    def __post_init__(self):
        radius = parse_rational(self.radius)
        if radius < 0:
            raise PreconditionError("entourage radius must be non-negative")
        object.__setattr__(self, "radius", radius)

    @property
    def model(self) -> GroupModel:
        return self.metric.model

    def contains(self, g: GroupElement) -> bool:
        return self.metric.norm(g) <= self.radius

    def relates(self, x: GroupElement, y: GroupElement) -> bool:
        """(x, y) is an edge of B(·, ·, U): yx⁻¹ ∈ U."""
        return self.contains(self.model.mul(y, self.model.inv(x)))

    def with_radius(self, radius: Fraction) -> "Entourage":
        return Entourage(self.metric, radius)


def entourage_contains(U: Entourage, g: GroupElement) -> bool:
    return U.contains(g)


class FiniteWindow(Sequence):
    """Duplicate-free finite set of elements held in canonical order."""

    __slots__ = ("_elements", "_index")

    def __init__(self, elements: Iterable[GroupElement] = ()):
        unique = sorted(set(elements))
        if len({g.model for g in unique}) > 1:
            raise ModelMismatchError("window mixes elements of different models")
        cap = limits().window_cap
        if len(unique) > cap:
            raise WindowLimitError(f"window of {len(unique)} elements exceeds the cap {cap}")
        self._elements: Tuple[GroupElement, ...] = tuple(unique)
        self._index = {g: i for i, g in enumerate(unique)}

    def __len__(self) -> int:
        return len(self._elements)

    def __getitem__(self, i):
        return self._elements[i]

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self._elements)

    def __contains__(self, g: object) -> bool:
        return g in self._index

    def index(self, g: GroupElement, *args) -> int:
        return self._index[g]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FiniteWindow):
            return self._elements == other._elements
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._elements)

    def __repr__(self) -> str:
        return f"FiniteWindow([{', '.join(str(g) for g in self._elements[:8])}{', …' if len(self) > 8 else ''}])"

    @property
    def elements(self) -> Tuple[GroupElement, ...]:
        return self._elements

    def as_set(self) -> frozenset:
        return frozenset(self._index)

    def to_json(self) -> List[str]:
        return [str(g) for g in self._elements]

    @classmethod
    def parse(cls, model: GroupModel, texts: Iterable[str]) -> "FiniteWindow":
        return cls(model.parse(t) for t in texts)


def grid_sample(model: GroupModel, resolution: int, bound: Optional[Fraction] = None) -> FiniteWindow:
    """Circle/torus: the 1/resolution grid. Finitely generated models: the word ball of that radius."""
    if resolution < 1:
        raise PreconditionError("resolution must be at least 1")
    window = model.grid(resolution)
    if bound is not None:
        bound = parse_rational(bound)
        window = FiniteWindow(g for g in window if model.metric.norm(g) <= bound)
    logger.debug("grid_sample {} resolution={} -> {} elements", model.name, resolution, len(window))
    return window


def translate_window(g: GroupElement, F: Iterable[GroupElement]) -> FiniteWindow:
    model = _REGISTRY[g.model]
    return FiniteWindow(model.mul(g, x) for x in F)


class MetricSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    rule: Literal["word", "arc", "discrete"]
    scale: Rational = ONE


class ModelDescriptor(BaseModel):
    """JSON/TOML descriptor of a group model."""
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    kind: Literal["lattice", "free", "heisenberg", "circle", "torus", "cyclic"]
    params: Dict[str, int] = {}
    generators: Optional[List[str]] = None
    metric: Optional[MetricSpec] = None


_KINDS = {
    "lattice": (LatticeGroup, ("dimension",)),
    "free": (FreeGroup, ("rank",)),
    "heisenberg": (HeisenbergGroup, ()),
    "circle": (CircleGroup, ()),
    "torus": (TorusGroup, ("dimension",)),
    "cyclic": (CyclicGroup, ("modulus",)),
}


def load_model(descriptor: Union[ModelDescriptor, Dict[str, Any]]) -> GroupModel:
    """Build a model from its descriptor."""
    if not isinstance(descriptor, ModelDescriptor):
        descriptor = ModelDescriptor.model_validate(descriptor)
    cls, allowed = _KINDS[descriptor.kind]
    unknown = set(descriptor.params) - set(allowed)
    if unknown:
        raise PreconditionError(f"unknown parameters for {descriptor.kind}: {sorted(unknown)}")
    shell = cls(**descriptor.params)
    generators = shell.parse_many(descriptor.generators) if descriptor.generators is not None else None
    metric = descriptor.metric
    if generators is None and metric is None:
        return shell
    return cls(
        **descriptor.params,
        generators=generators,
        rule=metric.rule if metric else None,
        scale=metric.scale if metric else ONE,
    )
