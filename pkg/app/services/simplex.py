"""
Exact-rational two-phase simplex on a dense Fraction tableau.

Solves   minimize c.x   subject to   A x = b,  x >= 0
with Bland's smallest-index rule, so it terminates without cycling.
"""

from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence

from app.services.errors import SolverError

OPTIMAL, INFEASIBLE, UNBOUNDED = 'optimal', 'infeasible', 'unbounded'


class LPResult(NamedTuple):
    status: str
    x: Optional[List[Fraction]] = None
    objective: Optional[Fraction] = None
    duals: Optional[List[Fraction]] = None
    farkas: Optional[List[Fraction]] = None
    ray: Optional[List[Fraction]] = None
    pivots: int = 0


class SimplexTableau:
    def __init__(self, A: Sequence[Sequence], b: Sequence, max_pivots: int = 100000):
        self.m = len(A)
        self.n = len(A[0]) if A else 0
        self.max_pivots = max_pivots
        self.pivots = 0
        # Rows with negative right-hand side are negated so artificials start feasible
        self.signs = [(-1 if Fraction(b[i]) < 0 else 1) for i in range(self.m)]
        width = self.n + self.m
        self.T = []
        self.rhs = []
        for i in range(self.m):
            s = self.signs[i]
            row = [s * Fraction(v) for v in A[i]] + [Fraction(0)] * self.m
            row[self.n + i] = Fraction(1)
            self.T.append(row)
            self.rhs.append(s * Fraction(b[i]))
        self.width = width
        self.basis = [self.n + i for i in range(self.m)]
        self.cost = [Fraction(0)] * width

    def reduced_costs(self) -> List[Fraction]:
        rc = list(self.cost)
        for i, bv in enumerate(self.basis):
            cb = self.cost[bv]
            if cb:
                row = self.T[i]
                for j in range(self.width):
                    if row[j]:
                        rc[j] -= cb * row[j]
        return rc

    def pivot(self, i: int, j: int):
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise SolverError(f"simplex exceeded {self.max_pivots} pivots")
        piv = self.T[i][j]
        row = [v / piv for v in self.T[i]]
        self.T[i] = row
        self.rhs[i] /= piv
        for k in range(self.m):
            if k != i:
                f = self.T[k][j]
                if f:
                    other = self.T[k]
                    for l in range(self.width):
                        if row[l]:
                            other[l] -= f * row[l]
                    self.rhs[k] -= f * self.rhs[i]
        self.basis[i] = j

    def bland_primal(self, allowed: int) -> Optional[int]:
        """Run to optimality; return the entering column if the problem is unbounded."""
        while True:
            rc = self.reduced_costs()
            entering = next((j for j in range(allowed) if rc[j] < 0 and j not in self.basis), None)
            if entering is None:
                return None
            candidates = [(self.rhs[i] / self.T[i][entering], self.basis[i], i)
                          for i in range(self.m) if self.T[i][entering] > 0]
            if not candidates:
                return entering
            _, _, i = min(candidates)
            self.pivot(i, entering)

    def objective(self) -> Fraction:
        return sum((self.cost[bv] * self.rhs[i] for i, bv in enumerate(self.basis)), Fraction(0))

    def duals(self) -> List[Fraction]:
        """Simplex multipliers of the original (unflipped) equality rows."""
        y = []
        for r in range(self.m):
            value = sum((self.cost[bv] * self.T[i][self.n + r] for i, bv in enumerate(self.basis)), Fraction(0))
            y.append(self.signs[r] * value)
        return y

    def primal(self) -> List[Fraction]:
        x = [Fraction(0)] * self.n
        for i, bv in enumerate(self.basis):
            if bv < self.n:
                x[bv] = self.rhs[i]
        return x

    def drive_out_artificials(self):
        for i, bv in enumerate(self.basis):
            if bv >= self.n:
                j = next((j for j in range(self.n) if self.T[i][j] != 0 and j not in self.basis), None)
                if j is not None:
                    self.pivot(i, j)


def solve_lp(c: Sequence, A: Sequence[Sequence], b: Sequence, max_pivots: int = 100000) -> LPResult:
    tableau = SimplexTableau(A, b, max_pivots)
    n = tableau.n

    # Phase 1: minimize the sum of artificials
    tableau.cost = [Fraction(0)] * n + [Fraction(1)] * tableau.m
    tableau.bland_primal(tableau.width)
    if tableau.objective() > 0:
        farkas = [-y for y in tableau.duals()]
        return LPResult(INFEASIBLE, farkas=farkas, pivots=tableau.pivots)
    tableau.drive_out_artificials()

    # Phase 2: artificials may not re-enter
    tableau.cost = [Fraction(v) for v in c] + [Fraction(0)] * tableau.m
    entering = tableau.bland_primal(n)
    if entering is not None:
        ray = [Fraction(0)] * n
        ray[entering] = Fraction(1)
        for i, bv in enumerate(tableau.basis):
            if bv < n:
                ray[bv] = -tableau.T[i][entering]
        return LPResult(UNBOUNDED, x=tableau.primal(), ray=ray, pivots=tableau.pivots)
    return LPResult(OPTIMAL, x=tableau.primal(), objective=tableau.objective(),
                    duals=tableau.duals(), pivots=tableau.pivots)


def find_nonnegative_solution(A: Sequence[Sequence], b: Sequence, max_pivots: int = 100000) -> LPResult:
    """Feasibility of A x = b, x >= 0; on failure `farkas` holds z with z.A >= 0 and z.b < 0."""
    return solve_lp([0] * (len(A[0]) if A else 0), A, b, max_pivots)
