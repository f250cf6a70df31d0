"""Dense-tableau exact simplex for problems whose origin is feasible.

Solves ``maximize c·x subject to A x ≤ b, x ≥ 0`` with ``b ≥ 0`` entirely in
``Fraction`` arithmetic, using Bland's rule so that degenerate pivots cannot
cycle. Row updates skip zero entries of the pivot row, which keeps the
bounded-Lipschitz programs built by the algebra module cheap.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

from loguru import logger

from .errors import PreconditionError

ZERO = Fraction(0)


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    x: List[Fraction]
    duals: List[Fraction]
    pivots: int


class UnboundedProblem(PreconditionError):
    pass


def solve_max(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> LPSolution:
    n = len(c)
    m = len(A)
    if any(len(row) != n for row in A) or len(b) != m:
        raise PreconditionError("inconsistent LP dimensions")
    if any(bi < 0 for bi in b):
        raise PreconditionError("origin must be feasible (b ≥ 0)")

    width = n + m
    rows: List[List[Fraction]] = []
    for i, row in enumerate(A):
        full = [Fraction(v) for v in row] + [ZERO] * m
        full[n + i] = Fraction(1)
        rows.append(full)
    rhs = [Fraction(v) for v in b]
    basis = [n + i for i in range(m)]
    reduced = [Fraction(v) for v in c] + [ZERO] * m
    value = ZERO
    pivots = 0

    while True:
        entering = next((j for j in range(width) if reduced[j] > 0), None)
        if entering is None:
            break

        leaving = None
        best_ratio = None
        for i in range(m):
            coeff = rows[i][entering]
            if coeff > 0:
                ratio = rhs[i] / coeff
                if best_ratio is None or ratio < best_ratio or (ratio == best_ratio and basis[i] < basis[leaving]):
                    best_ratio = ratio
                    leaving = i
        if leaving is None:
            raise UnboundedProblem("LP is unbounded")

        pivot_row = rows[leaving]
        scale = pivot_row[entering]
        if scale != 1:
            pivot_row = [v / scale for v in pivot_row]
            rows[leaving] = pivot_row
            rhs[leaving] /= scale
        support = [j for j in range(width) if pivot_row[j] != 0]

        for i in range(m):
            if i == leaving:
                continue
            factor = rows[i][entering]
            if factor != 0:
                row = rows[i]
                for j in support:
                    row[j] -= factor * pivot_row[j]
                rhs[i] -= factor * rhs[leaving]
        factor = reduced[entering]
        for j in support:
            reduced[j] -= factor * pivot_row[j]
        value += factor * rhs[leaving]
        basis[leaving] = entering
        pivots += 1

    x = [ZERO] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = rhs[i]
    duals = [-reduced[n + i] for i in range(m)]
    logger.trace("simplex finished: {} vars, {} rows, {} pivots, value {}", n, m, pivots, value)
    return LPSolution(value=value, x=x, duals=duals, pivots=pivots)


def certify_optimal(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], solution: LPSolution) -> bool:
    """Primal feasibility, dual feasibility and equal objectives, all exact."""
    n = len(c)
    x, y = solution.x, solution.duals
    if any(v < 0 for v in x) or any(v < 0 for v in y):
        return False
    for row, bi in zip(A, b):
        if sum((a * xj for a, xj in zip(row, x) if a), ZERO) > bi:
            return False
    for j in range(n):
        if sum((A[i][j] * y[i] for i in range(len(A)) if A[i][j]), ZERO) < c[j]:
            return False
    primal = sum((cj * xj for cj, xj in zip(c, x)), ZERO)
    dual = sum((bi * yi for bi, yi in zip(b, y)), ZERO)
    return primal == dual == solution.value
