"""Følner boxes in ℤ², the F₂ ball profile and exact circle rotations."""

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Set

from ..folner import FolnerCertificate, folner_search, seminorm_bridge, topological_defect
from ..groups import CircleGroup, Entourage, FiniteWindow, FreeGroup, LatticeGroup
from . import CheckResult, timed


def z2_certificates(sides=range(2, 31)) -> Dict[int, FolnerCertificate]:
    model = LatticeGroup(dimension=2)
    E = FiniteWindow(model.standard_generators())
    U = Entourage(model.metric, 0)
    return {n: topological_defect(model.box(n), E, U) for n in sides}


def z2_boxes() -> CheckResult:
    def body():
        certs = z2_certificates()
        wrong = [n for n, cert in certs.items() if cert.theta != 1 - Fraction(1, n)]
        model = LatticeGroup(dimension=2)
        search = folner_search(model, FiniteWindow(model.standard_generators()), Entourage(model.metric, 0), Fraction(9, 10), "boxes", 500)
        side_ok = search.found and search.certificate.F == model.box(10)
        return not wrong and side_ok, f"defect mismatches {wrong}, search found box of {len(search.certificate.F) if search.certificate else 0} points"
    return timed("z2_boxes", body)


def reduced_words(n: int) -> List[str]:
    """All reduced words of length ≤ n over a, A, b, B, by enumeration."""
    inverse = {"a": "A", "A": "a", "b": "B", "B": "b"}
    words = [""]
    for length in range(1, n + 1):
        for letters in itertools.product("aAbB", repeat=length):
            if all(inverse[x] != y for x, y in zip(letters, letters[1:])):
                words.append("".join(letters))
    return words


def f2_theta_oracle(n: int) -> Fraction:
    """|B_n ∩ aB_n| / |B_n| from the enumerated ball: w ∈ aB_n iff A·w reduces to length ≤ n."""
    words = reduced_words(n)
    inside = sum(1 for w in words if (len(w) - 1 if w.startswith("a") else len(w) + 1) <= n)
    return Fraction(inside, len(words))


def f2_certificates(radii=range(2, 7)) -> Dict[int, FolnerCertificate]:
    model = FreeGroup(rank=2)
    E = FiniteWindow([model.parse("a")])
    U = Entourage(model.metric, 0)
    return {n: topological_defect(model.ball(n), E, U) for n in radii}


def f2_profile() -> CheckResult:
    def body():
        certs = f2_certificates()
        closed = {n: Fraction(3 ** n - 1, 2 * 3 ** n - 1) for n in certs}
        wrong = [n for n, cert in certs.items() if not cert.theta == closed[n] == f2_theta_oracle(n)]
        model = FreeGroup(rank=2)
        E = FiniteWindow(model.parse_many(["a", "b"]))
        search = folner_search(model, E, Entourage(model.metric, 0), Fraction(3, 5), "balls", 6)
        return not wrong and not search.found, f"profile mismatches {wrong}, search best theta {search.best_theta} ({search.reason})"
    return timed("f2_profile", body)


def max_injection(left: List, right: List, allowed) -> int:
    """Largest injection left → right along ``allowed``, by exhaustive backtracking."""
    best = 0

    def extend(i: int, used: Set[int], size: int) -> None:
        nonlocal best
        if size + (len(left) - i) <= best:
            return
        if i == len(left):
            best = max(best, size)
            return
        for j, y in enumerate(right):
            if j not in used and allowed(left[i], y):
                used.add(j)
                extend(i + 1, used, size + 1)
                used.discard(j)
        extend(i + 1, used, size)

    extend(0, set(), 0)
    return best


def circle_certificates() -> Dict[str, FolnerCertificate]:
    model = CircleGroup()
    F = model.grid(12)
    U = Entourage(model.metric, Fraction(1, 24))
    return {
        "1/3": topological_defect(F, FiniteWindow([model.parse("1/3")]), U),
        "1/8": topological_defect(F, FiniteWindow([model.parse("1/8")]), U),
    }


def circle_rotation() -> CheckResult:
    def body():
        certs = circle_certificates()
        exact = certs["1/3"]
        m = exact.matchings[0]
        identity_matching = all(m.translate[j] == exact.F[i] for i, j in m.result.pairing.items())
        shifted = certs["1/8"]
        g = shifted.matchings[0]
        oracle = Fraction(max_injection(list(shifted.F), list(g.translate), shifted.U.relates), len(shifted.F))
        ok = exact.theta == 1 and identity_matching and shifted.theta == oracle
        return ok, f"rotation 1/3 theta {exact.theta}, rotation 1/8 theta {shifted.theta} vs oracle {oracle}"
    return timed("circle_rotation", body)


def seminorm_bridge_check() -> CheckResult:
    def body():
        certs = [*z2_certificates(range(2, 13)).values(), *f2_certificates(range(2, 4)).values(), *circle_certificates().values()]
        failed = []
        checked = 0
        for cert in certs:
            rows: Optional[list] = seminorm_bridge(cert)
            if rows is None:
                continue
            checked += len(rows)
            failed += [f"{cert.model.name}|F|={len(cert.F)} g={r.g}" for r in rows if not r.passed]
        return checked > 0 and not failed, f"{checked} rows checked, failures {failed[:3]}"
    return timed("seminorm_bridge", body)


checks = [z2_boxes, f2_profile, circle_rotation, seminorm_bridge_check]
