"""Paradoxical-decomposition certificates checked on finite windows.

A certificate is data: translator words plus piece classifiers, which are small
expression trees over canonical element encodings. Verification restricts the
partition and covering equations to a window. An equation instance is checked
only when every preimage it refers to lies in the window; the others are
counted as boundary defects and never as violations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from loguru import logger

from .errors import ClassifierError, PreconditionError
from .groups import FiniteWindow, FreeGroup, GroupElement, GroupModel
from .matching import BipartiteInstance, max_matching
from .perturb import PerturbedAction
from .workers import map_ordered

FORMS = ("classic", "joint")

_ARITY = {
    "first_letter": 1,
    "power_of": 1,
    "identity": 0,
    "sign": 2,
    "residue": 3,
    "true": 0,
    "false": 0,
    "not": 1,
}
_SIGNS = ("neg", "zero", "pos")


@dataclass(frozen=True)
class Classifier:
    """Decision rule for piece membership.

    ``args`` holds literals for leaf rules and child classifiers for
    ``not``/``and``/``or``. ``in_set`` takes canonical element strings.
    """
    op: str
    args: Tuple[Any, ...] = ()

    def __post_init__(self):
        if self.op not in _ARITY and self.op not in ("and", "or", "in_set"):
            raise ClassifierError(f"unknown classifier op {self.op!r}")
        arity = _ARITY.get(self.op)
        if arity is not None and len(self.args) != arity:
            raise ClassifierError(f"{self.op} takes {arity} arguments, got {len(self.args)}")
        if self.op in ("not", "and", "or") and not all(isinstance(a, Classifier) for a in self.args):
            raise ClassifierError(f"{self.op} combines classifiers only")
        if self.op == "sign" and self.args[1] not in _SIGNS:
            raise ClassifierError(f"sign must be one of {_SIGNS}")
        if self.op == "in_set":
            object.__setattr__(self, "args", tuple(sorted(set(self.args))))

    def evaluate(self, model: GroupModel, g: GroupElement) -> bool:
        op, args = self.op, self.args
        if op == "true":
            return True
        if op == "false":
            return False
        if op == "not":
            return not args[0].evaluate(model, g)
        if op == "and":
            return all(c.evaluate(model, g) for c in args)
        if op == "or":
            return any(c.evaluate(model, g) for c in args)
        if op == "identity":
            return model.is_identity(g)
        if op == "in_set":
            return str(g) in args
        if op in ("first_letter", "power_of"):
            if not isinstance(model, FreeGroup):
                raise ClassifierError(f"{op} needs a free group, not {model.name}")
            letter = model.letter(args[0])
            if op == "first_letter":
                return bool(g.data) and g.data[0] == letter
            return all(x == letter for x in g.data)
        coord = args[0]
        if not 0 <= coord < len(g.data):
            raise ClassifierError(f"coordinate {coord} out of range for {model.name}")
        value = g.data[coord]
        if op == "sign":
            return {"neg": value < 0, "zero": value == 0, "pos": value > 0}[args[1]]
        modulus, residue = args[1], args[2]
        if getattr(value, "denominator", 1) != 1 or modulus < 1:
            raise ClassifierError("residue needs integer coordinates and a positive modulus")
        return int(value) % modulus == residue % modulus

    def negated(self) -> "Classifier":
        return self.args[0] if self.op == "not" else Classifier("not", (self,))

    def to_json(self) -> Dict[str, Any]:
        return {"op": self.op, "args": [a.to_json() if isinstance(a, Classifier) else a for a in self.args]}

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "Classifier":
        try:
            op = payload["op"]
            raw = payload.get("args", [])
        except (KeyError, TypeError, AttributeError):
            raise ClassifierError(f"malformed classifier {payload!r}")
        args = tuple(cls.from_json(a) if isinstance(a, Mapping) else a for a in raw)
        return cls(op, args)


def rule(op: str, *args: Any) -> Classifier:
    return Classifier(op, args)


Word = Tuple[str, ...]


def _word(entry: Union[str, Sequence[str]]) -> Word:
    return (entry,) if isinstance(entry, str) else tuple(entry)


@dataclass(frozen=True)
class ParadoxCertificate:
    """Translators g_i, h_j and classifiers for pieces A_i, B_j.

    ``classic``: the pieces are pairwise disjoint and cover the window, and
    X = ⊔ g_iA_i = ⊔ h_jB_j. ``joint``: the A_i partition X, the B_j
    partition X, and X = ⊔ g_iA_i ⊔ ⊔ h_jB_j. A translator given as a list of
    elements acts as the composition of their actions, leftmost last.
    """
    g: Tuple[Word, ...]
    h: Tuple[Word, ...]
    A: Tuple[Classifier, ...]
    B: Tuple[Classifier, ...]
    form: str = "classic"

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(_word(w) for w in self.g))
        object.__setattr__(self, "h", tuple(_word(w) for w in self.h))
        if self.form not in FORMS:
            raise PreconditionError(f"certificate form must be one of {FORMS}")
        if len(self.g) != len(self.A) or len(self.h) != len(self.B):
            raise PreconditionError("one translator per piece is required")
        if not self.A or not self.B:
            raise PreconditionError("a certificate needs at least one A piece and one B piece")

    @property
    def pieces(self) -> int:
        return len(self.A) + len(self.B)

    def with_piece(self, side: str, index: int, classifier: Classifier) -> "ParadoxCertificate":
        pieces = list(getattr(self, side))
        pieces[index] = classifier
        return replace(self, **{side: tuple(pieces)})

    def to_json(self) -> Dict[str, Any]:
        encode = lambda w: w[0] if len(w) == 1 else list(w)
        return {
            "form": self.form,
            "g": [encode(w) for w in self.g],
            "h": [encode(w) for w in self.h],
            "A": [c.to_json() for c in self.A],
            "B": [c.to_json() for c in self.B],
        }

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "ParadoxCertificate":
        return cls(
            tuple(payload["g"]),
            tuple(payload["h"]),
            tuple(Classifier.from_json(c) for c in payload["A"]),
            tuple(Classifier.from_json(c) for c in payload["B"]),
            payload.get("form", "classic"),
        )


def f2_standard_certificate() -> ParadoxCertificate:
    """First-letter decomposition of F₂: F₂ = A₁ ⊔ aA₂ = B₁ ⊔ bB₂.

    A₁ is W(a) together with e and the powers of a⁻¹, A₂ the rest of W(a⁻¹).
    """
    powers = rule("power_of", "A")
    return ParadoxCertificate(
        g=("e", "a"),
        h=("e", "b"),
        A=(rule("or", rule("first_letter", "a"), powers), rule("and", rule("first_letter", "A"), rule("not", powers))),
        B=(rule("first_letter", "b"), rule("first_letter", "B")),
    )


class WindowAction:
    """Translators acting on a window, by the group itself or by a perturbed action α*."""

    def __init__(self, model: GroupModel, window: FiniteWindow, perturbed: Optional[PerturbedAction] = None):
        self.model = model
        self.window = window
        self.perturbed = perturbed
        self._inverse: Dict[GroupElement, Dict[GroupElement, GroupElement]] = {}
        self._words: Dict[Word, List[GroupElement]] = {}
        if perturbed is not None:
            for g, row in perturbed.rows.items():
                self._inverse[g] = {y: x for x, y in row.items()}

    def _parse(self, word: Word) -> List[GroupElement]:
        if word not in self._words:
            self._words[word] = [self.model.parse(s) for s in word]
        return self._words[word]

    def image(self, word: Word, x: GroupElement) -> Optional[GroupElement]:
        y = x
        for g in reversed(self._parse(word)):
            if self.perturbed is None:
                y = self.model.mul(g, y)
            else:
                if g not in self.perturbed.rows:
                    raise PreconditionError(f"{g} is not in the perturbed action's pool")
                y = self.perturbed.rows[g].get(y)
            if y is None or y not in self.window:
                return None
        return y

    def preimage(self, word: Word, y: GroupElement) -> Optional[GroupElement]:
        x = y
        for g in self._parse(word):
            if self.perturbed is None:
                x = self.model.mul(self.model.inv(g), x)
            else:
                if g not in self._inverse:
                    raise PreconditionError(f"{g} is not in the perturbed action's pool")
                x = self._inverse[g].get(x)
            if x is None or x not in self.window:
                return None
        return x


@dataclass(frozen=True)
class EquationRow:
    equation: str
    checkable: int
    covered: int
    violations: int
    boundary_defects: int
    samples: Tuple[str, ...] = ()


@dataclass(frozen=True)
class WindowReport:
    window_size: int
    rows: Tuple[EquationRow, ...]

    @property
    def interior_violations(self) -> int:
        return sum(r.violations for r in self.rows)

    @property
    def boundary_defects(self) -> int:
        return sum(r.boundary_defects for r in self.rows)

    def witnesses(self) -> List[str]:
        return [s for r in self.rows for s in r.samples]

    def csv_rows(self) -> List[Dict[str, Any]]:
        return [
            {"equation": r.equation, "checkable": r.checkable, "covered": r.covered, "violations": r.violations, "boundary_defects": r.boundary_defects}
            for r in self.rows
        ]


SAMPLE_LIMIT = 5


def _partition_row(name: str, counts: Sequence[int], window: FiniteWindow) -> EquationRow:
    bad = [str(x) for x, c in zip(window, counts) if c != 1]
    return EquationRow(name, len(window), len(window) - len(bad), len(bad), 0, tuple(bad[:SAMPLE_LIMIT]))


def _cover_row(name: str, hits: Sequence[Optional[int]], window: FiniteWindow) -> EquationRow:
    boundary = sum(1 for c in hits if c is None)
    bad = [str(x) for x, c in zip(window, hits) if c is not None and c != 1]
    checkable = len(window) - boundary
    return EquationRow(name, checkable, checkable - len(bad), len(bad), boundary, tuple(bad[:SAMPLE_LIMIT]))


def verify_on_window(
    cert: ParadoxCertificate,
    window: FiniteWindow,
    model: GroupModel,
    perturbed: Optional[PerturbedAction] = None,
    workers: Optional[int] = None,
) -> WindowReport:
    """Exact window counts for the partition and covering equations of ``cert``.

    Every row satisfies covered + violations + boundary_defects = |window|.
    """
    if not len(window):
        raise PreconditionError("empty window")
    action = WindowAction(model, window, perturbed)

    def memberships(x: GroupElement) -> Tuple[Tuple[bool, ...], Tuple[bool, ...]]:
        return tuple(c.evaluate(model, x) for c in cert.A), tuple(c.evaluate(model, x) for c in cert.B)

    table = dict(zip(window, map_ordered(memberships, list(window), workers)))

    def hits(words: Sequence[Word], side: int, y: GroupElement) -> Optional[int]:
        total = 0
        for i, w in enumerate(words):
            x = action.preimage(w, y)
            if x is None:
                return None
            total += table[x][side][i]
        return total

    def count(y: GroupElement) -> Tuple[Optional[int], Optional[int]]:
        return hits(cert.g, 0, y), hits(cert.h, 1, y)

    covers = map_ordered(count, list(window), workers)
    a_counts = [sum(table[x][0]) for x in window]
    b_counts = [sum(table[x][1]) for x in window]

    if cert.form == "classic":
        rows = (
            _partition_row("pieces", [a + b for a, b in zip(a_counts, b_counts)], window),
            _cover_row("cover-g", [c[0] for c in covers], window),
            _cover_row("cover-h", [c[1] for c in covers], window),
        )
    else:
        joint = [None if a is None or b is None else a + b for a, b in covers]
        rows = (
            _partition_row("partition-A", a_counts, window),
            _partition_row("partition-B", b_counts, window),
            _cover_row("cover", joint, window),
        )
    report = WindowReport(len(window), rows)
    logger.debug("verify_on_window |W|={}: violations={} boundary={}", len(window), report.interior_violations, report.boundary_defects)
    return report


@dataclass(frozen=True)
class PieceCountRow:
    pieces: int
    best_defect: Optional[int]
    zero_defect_possible: bool
    configurations: int
    exhausted: bool
    certificate: Optional[ParadoxCertificate] = field(default=None, compare=False)


@dataclass(frozen=True)
class ParadoxSearchResult:
    rows: Tuple[PieceCountRow, ...]
    best: Optional[ParadoxCertificate]
    best_defect: Optional[int]

    @property
    def exhausted(self) -> bool:
        return any(r.exhausted for r in self.rows)


def _free_option(options: Sequence[Optional[int]]) -> Optional[int]:
    return next((k for k, item in enumerate(options) if item is None), None)


def _solve_configuration(
    g_words: Sequence[Word],
    h_words: Sequence[Word],
    window: FiniteWindow,
    model: GroupModel,
    action: WindowAction,
) -> Optional[Tuple[bool, ParadoxCertificate, int]]:
    """Best assignment of window elements to pieces for fixed translators.

    Checkable cover instances become right vertices that must be hit once;
    |X| − |R| shared free slots absorb elements placed where their image is
    not checked. A left-perfect matching is exactly a zero-defect assignment.
    """
    words = [(0, w) for w in g_words] + [(1, w) for w in h_words]
    checkable = [
        {y for y in window if all(action.preimage(w, y) is not None for w in (g_words if side == 0 else h_words))}
        for side in (0, 1)
    ]
    if not checkable[0] or not checkable[1]:
        return None
    items = [(0, y) for y in sorted(checkable[0])] + [(1, y) for y in sorted(checkable[1])]
    item_index = {item: j for j, item in enumerate(items)}
    slots = len(window) - len(items)

    # options[x][k]: item hit when x joins piece k, None when the image is not checked
    options: List[List[Optional[int]]] = []
    for x in window:
        row = []
        for side, w in words:
            y = action.image(w, x)
            row.append(item_index.get((side, y)) if y is not None else None)
        options.append(row)

    adjacency = []
    for row in options:
        neighbours = sorted({j for j in row if j is not None})
        if slots > 0 and _free_option(row) is not None:
            neighbours += list(range(len(items), len(items) + slots))
        adjacency.append(tuple(neighbours))
    result = max_matching(BipartiteInstance(tuple(adjacency), len(items) + max(slots, 0)))
    perfect = slots >= 0 and result.mu == len(window)

    assignment: List[int] = []
    for i, row in enumerate(options):
        j = result.pairing.get(i)
        if j is None:
            k = _free_option(row)
            assignment.append(0 if k is None else k)
        elif j >= len(items):
            assignment.append(_free_option(row))
        else:
            assignment.append(row.index(j))

    pieces: List[List[str]] = [[] for _ in words]
    for x, k in zip(window, assignment):
        pieces[k].append(str(x))
    classifiers = [rule("in_set", *p) for p in pieces]
    cert = ParadoxCertificate(tuple(g_words), tuple(h_words), tuple(classifiers[: len(g_words)]), tuple(classifiers[len(g_words):]))
    defect = verify_on_window(cert, window, model, action.perturbed, workers=1).interior_violations
    return perfect, cert, defect


def _splits(pieces: int) -> List[Tuple[int, int]]:
    return [(m, pieces - m) for m in range(1, pieces)]


def _search_piece_count(
    pieces: int,
    window: FiniteWindow,
    pool: FiniteWindow,
    model: GroupModel,
    action: WindowAction,
    budget: int,
) -> PieceCountRow:
    translators = [(str(g),) for g in pool]
    best: Optional[Tuple[int, ParadoxCertificate]] = None
    possible = False
    evaluated = 0
    for m, n in _splits(pieces):
        for g_words in itertools.combinations_with_replacement(translators, m):
            for h_words in itertools.combinations_with_replacement(translators, n):
                if evaluated >= budget:
                    return PieceCountRow(pieces, best[0] if best else None, possible, evaluated, True, best[1] if best else None)
                evaluated += 1
                solved = _solve_configuration(g_words, h_words, window, model, action)
                if solved is None:
                    continue
                perfect, cert, defect = solved
                possible = possible or perfect
                if best is None or defect < best[0]:
                    best = (defect, cert)
                if defect == 0:
                    return PieceCountRow(pieces, 0, True, evaluated, False, cert)
    return PieceCountRow(pieces, best[0] if best else None, possible, evaluated, False, best[1] if best else None)


def _carry(cert: ParadoxCertificate) -> ParadoxCertificate:
    """Same assignment with one more (empty) piece."""
    return replace(cert, h=cert.h + (cert.h[-1],), B=cert.B + (rule("false"),))


def search_small_paradox(
    window: FiniteWindow,
    pool: FiniteWindow,
    model: GroupModel,
    max_pieces: int,
    budget: int = 500,
    perturbed: Optional[PerturbedAction] = None,
    workers: Optional[int] = None,
) -> ParadoxSearchResult:
    """Fewest interior violations reachable with p pieces, for p = 2 … max_pieces.

    Translators come from the pool as multisets in canonical order, with at
    most ``budget`` configurations per piece count. Configurations with no
    checkable cover instance are skipped. The reported defect for p is the
    best over all counts up to p, so it never increases with p. A defect of
    zero is an upper-bound statement about this window only.
    """
    if not len(window):
        raise PreconditionError("empty window")
    if max_pieces < 2:
        raise PreconditionError("a paradox needs at least two pieces")
    if max_pieces < 4:
        logger.info("max_pieces {} is below the group lower bound of 4", max_pieces)
    action = WindowAction(model, window, perturbed)
    counts = list(range(2, max_pieces + 1))
    raw = map_ordered(lambda p: _search_piece_count(p, window, pool, model, action, budget), counts, workers)

    rows: List[PieceCountRow] = []
    best: Optional[Tuple[int, ParadoxCertificate]] = None
    for row in raw:
        if best is not None:
            best = (best[0], _carry(best[1]))
        if row.best_defect is not None and (best is None or row.best_defect < best[0]):
            best = (row.best_defect, row.certificate)
        possible = row.zero_defect_possible or bool(rows and rows[-1].zero_defect_possible)
        rows.append(PieceCountRow(row.pieces, best[0] if best else None, possible, row.configurations, row.exhausted, best[1] if best else None))
        logger.info("paradox search p={}: best defect {} after {} configurations", row.pieces, rows[-1].best_defect, row.configurations)
    return ParadoxSearchResult(tuple(rows), best[1] if best else None, best[0] if best else None)
