"""
Genus-zero conditions behind the Mori cone statement for small (g, n).

For N = g + n marked points with S_g acting on the last g of them, every
level k = N, N-1, ... down to 8 must have an effective F-nef cone: level j is
the setup (N - j, g - 2j). Between consecutive levels, pulling back along a
boundary restriction that glues two of the permuted points into one node must
keep F-nef divisors F-nef and S_{g-2j-2}-invariant.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from app.services.cone import (
    ContainmentReport,
    build_system,
    validate_certificate,
    verify_effectivity,
)
from app.services.divisors import BVector, is_f_nef, is_invariant, relabel
from app.services.double_description import extreme_rays
from app.services.errors import ReductionFailureError, UnsupportedSymmetryError
from app.services.logger import VerificationLogger
from app.services.pullback import AttachingMap, pullback
from app.services.symmetry import InvariantDivisor, SymSetup, collect, expand

MAX_GENUS = {1: 9, 2: 7, 3: 5}
SMALLEST_LEVEL = 8

TRUSTED_ASSUMPTIONS = (
    "The Mori cone of the moduli space of stable genus-g curves with n marked points is generated by "
    "one-dimensional strata whenever the same holds for the genus-zero space with g + n marked points "
    "modulo S_g (imported, not verified here).",
    "That statement for the quotient follows once, for every boundary restriction from k to g + n points "
    "with 8 <= k <= g + n, the pullback of any F-nef divisor is an effective combination of boundary "
    "classes (imported, not verified here).",
)


@dataclass(frozen=True)
class MoriCase:
    g: int
    n: int

    def __post_init__(self):
        if self.n not in MAX_GENUS:
            raise UnsupportedSymmetryError(f"only n in {sorted(MAX_GENUS)} is covered, got n={self.n}")
        if not 2 <= self.g <= MAX_GENUS[self.n]:
            raise UnsupportedSymmetryError(
                f"for n={self.n} the genus must lie in 2..{MAX_GENUS[self.n]}, got g={self.g}")

    @property
    def total(self) -> int:
        return self.g + self.n


def levels(case: MoriCase) -> List[SymSetup]:
    """(k, m) = (N - j, g - 2j) for every k >= 8."""
    found = []
    j = 0
    while case.total - j >= SMALLEST_LEVEL:
        found.append(SymSetup(case.total - j, case.g - 2 * j))
        j += 1
    return found


def restriction_representatives(setup: SymSetup) -> List[Tuple[int, int]]:
    """One glued pair per S_m-orbit: two fixed points, a fixed and a permuted one, two permuted ones."""
    fixed, permuted = setup.fixed, setup.permuted
    pairs = [(a, b) for i, a in enumerate(fixed) for b in fixed[i + 1:]]
    if permuted:
        pairs += [(a, permuted[0]) for a in fixed]
    if len(permuted) >= 2:
        pairs.append((permuted[0], permuted[1]))
    return pairs


def f_nef_generators(setup: SymSetup) -> List[InvariantDivisor]:
    """Every extreme ray of the invariant F-nef cone, and both signs of each line in it."""
    system = build_system(setup)
    basis = system.basis
    rays, lines = extreme_rays(system.matrix(), len(basis))
    found = [InvariantDivisor(setup, dict(zip(basis, ray))) for ray in rays]
    for line in lines:
        found.append(InvariantDivisor(setup, dict(zip(basis, line))))
        found.append(InvariantDivisor(setup, {b: -v for b, v in zip(basis, line)}))
    return found


@dataclass(frozen=True)
class RestrictionCheck:
    glued: Tuple[int, int]
    generators: int
    f_nef: bool
    invariant: bool
    expressible: bool
    detail: str = ''


def _to_reduced(setup: SymSetup, attaching: AttachingMap, pulled: BVector) -> Tuple[SymSetup, BVector]:
    """Fixed labels stay, q becomes the next fixed label, surviving permuted labels shift down."""
    f = len(setup.fixed)
    mapping = {attaching.q: f + 1}
    survivors = [p for p in setup.permuted if p not in attaching.complement]
    for offset, p in enumerate(survivors):
        mapping[p] = f + 2 + offset
    reduced = SymSetup(setup.n - 1, len(survivors))
    return reduced, relabel(pulled, mapping, reduced.ground)


def descent_check(setup: SymSetup, generators: Optional[List[InvariantDivisor]] = None) -> List[RestrictionCheck]:
    """
    Pull the generators of the invariant F-nef cone back along each orbit
    representative of a two-point gluing. Pullback is linear and the F-nef
    cone of the target is convex, so this covers every F-nef invariant divisor.
    """
    if generators is None:
        generators = f_nef_generators(setup)
    checks = []
    for glued in restriction_representatives(setup):
        A = tuple(p for p in setup.ground.labels if p not in glued)
        attaching = AttachingMap(setup.ground, A, setup.n + 1)
        survivors = [p for p in setup.permuted if p not in glued]
        f_nef = invariant = expressible = True
        detail = ''
        for divisor in generators:
            pulled = pullback(attaching, expand(divisor))
            f_nef = f_nef and is_f_nef(pulled).is_nef
            invariant = invariant and is_invariant(pulled, survivors)
            if set(glued) <= set(setup.permuted) and setup.n - 1 - len(survivors) <= 3:
                reduced, moved = _to_reduced(setup, attaching, pulled)
                try:
                    collect(reduced, moved)
                except ReductionFailureError as e:
                    expressible = False
                    detail = detail or str(e)
        checks.append(RestrictionCheck(glued, len(generators), f_nef, invariant, expressible, detail))
    return checks


@dataclass(frozen=True)
class LevelReport:
    setup: SymSetup
    report: ContainmentReport
    certificates_valid: bool
    descent: Tuple[RestrictionCheck, ...] = ()

    @property
    def contained(self) -> bool:
        return self.report.contained and self.certificates_valid

    @property
    def descent_ok(self) -> bool:
        return all(c.f_nef and c.invariant for c in self.descent)


@dataclass(frozen=True)
class MoriReport:
    case: MoriCase
    levels: Tuple[LevelReport, ...] = ()
    assumptions: Tuple[str, ...] = field(default=TRUSTED_ASSUMPTIONS)

    @property
    def verified(self) -> bool:
        """Literal reading: every level contained, every descent keeps F-nefness and invariance."""
        return all(level.contained and level.descent_ok for level in self.levels)

    @property
    def strictly_verified(self) -> bool:
        """Stricter reading: the permuted-pair pullbacks are also boundary combinations in the reduced basis."""
        return self.verified and all(c.expressible for level in self.levels for c in level.descent)

    @property
    def failing_level(self) -> Optional[LevelReport]:
        return next((level for level in self.levels if not (level.contained and level.descent_ok)), None)


def mori_check(case: MoriCase) -> MoriReport:
    setups = levels(case)
    reports = []
    for position, setup in enumerate(setups):
        report = verify_effectivity(setup)
        system = build_system(setup)
        valid = all(validate_certificate(system, c) for c in report.certificates().values())
        descent = ()
        if position + 1 < len(setups):
            descent = tuple(descent_check(setup))
        reports.append(LevelReport(setup, report, valid, descent))
    result = MoriReport(case, tuple(reports))
    VerificationLogger().log_operation(
        'mori',
        {'g': case.g, 'n': case.n},
        {'verified': result.verified, 'strict': result.strictly_verified,
         'levels': [f"{s.n}/{s.m}" for s in setups]},
    )
    return result
