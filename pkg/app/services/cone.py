"""
Certified containment of the symmetrized F-nef cone in the orthant of basis
coordinates.

For every basis coordinate t the engine either finds nonnegative multipliers
with sum_j lambda_j form_j = [t] (a Farkas certificate) or an invariant divisor
on which every form is nonnegative and [t] is negative.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import joblib

from app.config import get_settings
from app.services.divisors import is_f_nef
from app.services.double_description import extreme_rays
from app.services.errors import SolverError, UnsupportedSymmetryError
from app.services.logger import VerificationLogger
from app.services.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, find_nonnegative_solution, solve_lp
from app.services.symmetry import (
    InvariantDivisor,
    LinearForm,
    OrbitIndex,
    OrbitPartition,
    SymSetup,
    basis_for,
    coordinate_functional,
    expand,
    is_self_paired,
    symmetrized_inequalities,
)

CONTAINED, COUNTEREXAMPLE = 'CONTAINED', 'COUNTEREXAMPLE'

Target = Union[OrbitIndex, LinearForm]


@dataclass(frozen=True)
class HalfspaceSystem:
    """Deduplicated symmetrized F-inequalities form_j >= 0."""
    setup: SymSetup
    forms: Tuple[LinearForm, ...]
    provenance: Tuple[Tuple[OrbitPartition, ...], ...]
    trivial: Tuple[OrbitPartition, ...] = ()

    @property
    def basis(self) -> Tuple[OrbitIndex, ...]:
        return basis_for(self.setup)

    def __len__(self) -> int:
        return len(self.forms)

    def matrix(self) -> List[List[Fraction]]:
        """One row per form, one column per basis coordinate."""
        return [form.row(self.basis) for form in self.forms]

    def feasible(self, point: InvariantDivisor) -> bool:
        return all(form.evaluate(point) >= 0 for form in self.forms)


@lru_cache(maxsize=None)
def build_system(setup: SymSetup) -> HalfspaceSystem:
    forms: List[LinearForm] = []
    sources: Dict[LinearForm, List[OrbitPartition]] = {}
    trivial = []
    for orbit, form in symmetrized_inequalities(setup):
        if form.is_zero():
            trivial.append(orbit)
            continue
        if form not in sources:
            forms.append(form)
            sources[form] = []
        sources[form].append(orbit)
    return HalfspaceSystem(setup, tuple(forms), tuple(tuple(sources[f]) for f in forms), tuple(trivial))


@dataclass(frozen=True)
class FarkasCertificate:
    setup: SymSetup
    target: Optional[OrbitIndex]
    target_form: LinearForm
    multipliers: Mapping[int, Fraction] = field(default_factory=dict)

    def combination(self, system: HalfspaceSystem) -> LinearForm:
        total = LinearForm(self.setup)
        for j, weight in self.multipliers.items():
            total = total + weight * system.forms[j]
        return total

    def residual(self, system: HalfspaceSystem) -> LinearForm:
        return self.combination(system) - self.target_form

    def scaled(self, factor: Fraction) -> "FarkasCertificate":
        factor = Fraction(factor)
        if factor <= 0:
            raise SolverError("certificates only scale by positive factors")
        return FarkasCertificate(self.setup, self.target, factor * self.target_form,
                                 {j: factor * w for j, w in self.multipliers.items()})


@dataclass(frozen=True)
class CounterexampleRay:
    setup: SymSetup
    target: Optional[OrbitIndex]
    target_form: LinearForm
    point: InvariantDivisor
    value: Fraction


Outcome = Union[FarkasCertificate, CounterexampleRay]


def _target_form(system: HalfspaceSystem, target: Target) -> Tuple[Optional[OrbitIndex], LinearForm]:
    if isinstance(target, OrbitIndex):
        return target, coordinate_functional(system.setup, target)
    if target.setup != system.setup:
        raise UnsupportedSymmetryError(f"target on {target.setup}, system on {system.setup}")
    if target.constant != 0:
        raise UnsupportedSymmetryError("the target functional must be homogeneous")
    return None, target


def validate_certificate(system: HalfspaceSystem, certificate: FarkasCertificate) -> bool:
    """Solver-independent check: nonnegative weights that re-expand exactly to the target."""
    if certificate.setup != system.setup:
        return False
    for j, weight in certificate.multipliers.items():
        if not 0 <= j < len(system.forms) or weight < 0:
            return False
    return certificate.residual(system).is_zero()


def validate_counterexample(system: HalfspaceSystem, ray: CounterexampleRay) -> bool:
    if not system.feasible(ray.point) or ray.target_form.evaluate(ray.point) >= 0:
        return False
    return is_f_nef(expand(ray.point)).is_nef


def minimize_on_slice(system: HalfspaceSystem, form: LinearForm, max_pivots: int):
    """Minimize `form` over the slice {forms >= 0, sum of forms = 1}; x = x+ - x-."""
    basis, rows = system.basis, system.matrix()
    d, N = len(basis), len(rows)
    t = form.row(basis)
    A, b = [], []
    for j, row in enumerate(rows):
        slack = [Fraction(0)] * N
        slack[j] = Fraction(-1)
        A.append(list(row) + [-v for v in row] + slack)
        b.append(0)
    total = [sum((row[r] for row in rows), Fraction(0)) for r in range(d)]
    A.append(total + [-v for v in total] + [Fraction(0)] * N)
    b.append(1)
    return solve_lp(t + [-v for v in t] + [0] * N, A, b, max_pivots)


def _counterexample(system: HalfspaceSystem, target: Optional[OrbitIndex], form: LinearForm,
                    farkas: Sequence[Fraction], max_pivots: int) -> CounterexampleRay:
    basis = system.basis
    d = len(basis)
    result = minimize_on_slice(system, form, max_pivots)
    coords = None
    if result.status == OPTIMAL and result.objective < 0:
        coords = [result.x[r] - result.x[d + r] for r in range(d)]
    elif result.status == UNBOUNDED:
        coords = [result.ray[r] - result.ray[d + r] for r in range(d)]
    if coords is None:
        # every violating direction is killed by all forms; the Farkas vector still works
        coords = list(farkas)
    point = InvariantDivisor(system.setup, dict(zip(basis, coords)))
    return CounterexampleRay(system.setup, target, form, point, form.evaluate(point))


def certify_nonnegative(system: HalfspaceSystem, target: Target,
                        max_pivots: Optional[int] = None) -> Outcome:
    if max_pivots is None:
        max_pivots = get_settings().max_pivots
    index, form = _target_form(system, target)
    basis = system.basis
    # columns are the forms, rows the basis coordinates
    A = [[f.coefficient(r) for f in system.forms] for r in basis]
    result = find_nonnegative_solution(A, form.row(basis), max_pivots)

    if result.status != INFEASIBLE:
        multipliers = {j: w for j, w in enumerate(result.x) if w != 0}
        certificate = FarkasCertificate(system.setup, index, form, multipliers)
        if not validate_certificate(system, certificate):
            raise SolverError(f"certificate for {form} failed re-expansion: {certificate.residual(system)}")
        return certificate

    ray = _counterexample(system, index, form, result.farkas, max_pivots)
    if not validate_counterexample(system, ray):
        raise SolverError(f"counterexample for {form} failed validation at {ray.point}")
    return ray


@dataclass(frozen=True)
class ContainmentReport:
    setup: SymSetup
    outcomes: Mapping[OrbitIndex, Outcome]
    self_paired: Tuple[OrbitIndex, ...] = ()
    system_size: int = 0

    @property
    def contained(self) -> bool:
        return all(isinstance(o, FarkasCertificate) for o in self.outcomes.values())

    @property
    def status(self) -> str:
        return CONTAINED if self.contained else COUNTEREXAMPLE

    def certificates(self) -> Dict[OrbitIndex, FarkasCertificate]:
        return {k: v for k, v in self.outcomes.items() if isinstance(v, FarkasCertificate)}

    def counterexamples(self) -> Dict[OrbitIndex, CounterexampleRay]:
        return {k: v for k, v in self.outcomes.items() if isinstance(v, CounterexampleRay)}


def verify_effectivity(setup: SymSetup, max_pivots: Optional[int] = None) -> ContainmentReport:
    system = build_system(setup)
    logger = VerificationLogger()
    outcomes = {}
    for target in basis_for(setup):
        outcome = certify_nonnegative(system, target, max_pivots)
        outcomes[target] = outcome
        logger.log_certificate({'n': setup.n, 'm': setup.m}, target.label(),
                               CONTAINED if isinstance(outcome, FarkasCertificate) else COUNTEREXAMPLE)
    report = ContainmentReport(
        setup, outcomes,
        self_paired=tuple(idx for idx in basis_for(setup) if is_self_paired(setup, idx)),
        system_size=len(system),
    )
    logger.log_operation(
        'verify',
        {'n': setup.n, 'm': setup.m},
        {'status': report.status, 'inequalities': len(system), 'targets': len(outcomes)},
    )
    return report


def verify_many(setups: Iterable[SymSetup], n_jobs: Optional[int] = None) -> List[ContainmentReport]:
    """Independent setups in parallel; results come back in input order."""
    setups = list(setups)
    if n_jobs is None:
        n_jobs = get_settings().max_jobs
    if n_jobs == 0:
        n_jobs = -1
    return joblib.Parallel(n_jobs=n_jobs)(joblib.delayed(verify_effectivity)(s) for s in setups)


def slice_vertices(system: HalfspaceSystem, max_pivots: Optional[int] = None) -> List[InvariantDivisor]:
    """F-nef invariant divisors minimizing +-[t] on the normalized slice, one per distinct vertex."""
    if max_pivots is None:
        max_pivots = get_settings().max_pivots
    basis, d = system.basis, len(system.basis)
    found: List[InvariantDivisor] = []
    for target in basis:
        for sign in (1, -1):
            result = minimize_on_slice(system, LinearForm(system.setup, {target: sign}), max_pivots)
            if result.status != OPTIMAL:
                continue
            point = InvariantDivisor(system.setup, {
                basis[r]: result.x[r] - result.x[d + r] for r in range(d)})
            if point not in found:
                found.append(point)
    return found


def all_setups(nmax: int, nmin: int = 4) -> List[SymSetup]:
    return [SymSetup(n, m) for n in range(nmin, nmax + 1) for m in range(n - 3, n + 1)]


class DualCheck(NamedTuple):
    setup: SymSetup
    rays: Tuple[InvariantDivisor, ...]
    lineality: Tuple[InvariantDivisor, ...]
    all_nonnegative: bool


def dual_cross_check(setup: SymSetup) -> DualCheck:
    """Extreme rays of {forms >= 0} by double description, independently of the simplex."""
    system = build_system(setup)
    basis = system.basis
    rays, lineality = extreme_rays(system.matrix(), len(basis))
    as_points = tuple(InvariantDivisor(setup, dict(zip(basis, ray))) for ray in rays)
    lines = tuple(InvariantDivisor(setup, dict(zip(basis, line))) for line in lineality)
    nonnegative = not lines and all(v >= 0 for ray in rays for v in ray)
    VerificationLogger().log_operation(
        'dual_cross_check',
        {'n': setup.n, 'm': setup.m},
        {'rays': len(as_points), 'lineality': len(lines), 'all_nonnegative': nonnegative},
    )
    return DualCheck(setup, as_points, lines, nonnegative)
