"""Precompact finite-group perturbation and the finite package assembly on the circle."""

from fractions import Fraction

from ..groups import CircleGroup, Entourage
from ..perturb import build_perturbation, precompact_perturbation, verify_perturbation
from . import CheckResult, timed


def precompact_circle() -> CheckResult:
    def body():
        model = CircleGroup()
        r = Fraction(7, 20)
        U = Entourage(model.metric, r)
        window = model.grid(60)
        result = precompact_perturbation(U, window, model.grid(12))
        report = verify_perturbation(result.action, U)
        V = r / 3
        separated = all(model.metric(x, y) > V for i, x in enumerate(result.F) for y in result.F[i + 1:])
        maximal = all(any(model.metric(x, p) <= V for p in result.F) for x in window)
        ok = report.ok and separated and maximal and len(result.F) <= 9 and result.order_divides_factorial
        return ok, f"|F|={len(result.F)} order={result.group_order} violations={len(report.violations)}"
    return timed("precompact_circle", body)


def assembly_circle() -> CheckResult:
    def body():
        model = CircleGroup()
        U = Entourage(model.metric, Fraction(1, 10))
        family = [(model.parse_many(["0", "1/5"]), 4), (model.parse_many(["0", "2/5"]), 4)]
        action = build_perturbation(family, U)
        report = verify_perturbation(action, U)
        involutive = all(action.involutions.values())
        sizes = all(len(p.D) >= Fraction(3, 4) * len(p.F) for p in action.packages)
        return report.ok and involutive and sizes, f"|W|={len(action.window)} packages={[len(p.F) for p in action.packages]} violations={len(report.violations)}"
    return timed("assembly_circle", body)


checks = [precompact_circle, assembly_circle]
