"""The F₂ first-letter certificate on balls, and the amenable ℤ control."""

from ..groups import FiniteWindow, FreeGroup, LatticeGroup
from ..paradox import f2_standard_certificate, search_small_paradox, verify_on_window
from . import CheckResult, timed

MAX_RADIUS = 8


def f2_certificate() -> CheckResult:
    def body():
        model = FreeGroup(rank=2)
        cert = f2_standard_certificate()
        dirty = [n for n in range(1, MAX_RADIUS + 1) if verify_on_window(cert, model.ball(n), model).interior_violations]
        window = model.ball(4)
        undetected = []
        for side in ("A", "B"):
            for i, classifier in enumerate(getattr(cert, side)):
                corrupted = cert.with_piece(side, i, classifier.negated())
                if verify_on_window(corrupted, window, model).interior_violations == 0:
                    undetected.append(f"{side}{i + 1}")
        return not dirty and not undetected, f"radii with violations {dirty}, undetected corruptions {undetected}"
    return timed("f2_certificate", body)


def amenable_control() -> CheckResult:
    def body():
        model = LatticeGroup(dimension=1)
        window = FiniteWindow(model.element((k,)) for k in range(-10, 11))
        pool = FiniteWindow(model.parse_many(["-1", "0", "1"]))
        result = search_small_paradox(window, pool, model, 6, budget=10_000)
        positive = result.best_defect is not None and result.best_defect > 0
        impossible = not any(r.zero_defect_possible for r in result.rows)
        return positive and impossible and not result.exhausted, f"minimal interior defect {result.best_defect}"
    return timed("amenable_control", body)


checks = [f2_certificate, amenable_control]
