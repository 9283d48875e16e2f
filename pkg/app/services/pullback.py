"""
Pullback of divisor classes along the attaching map

    M_{0, A + q}  ->  M_{0, P}

that glues a fixed (A^c + r)-pointed curve at q. On boundary classes:

    delta_B  ->  -psi_q                    if B = A or B = A^c
                 delta_B                   if B strictly inside A
                 delta_{B - A^c + q}       if B strictly contains A^c
                 0                         otherwise
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from app.services.divisors import (
    BVector,
    CanonSubset,
    FPartition,
    GroundSet,
    canonicalize,
    enumerate_f_partitions,
    f_intersection,
    psi_class,
    relabel,
)
from app.services.errors import ReductionFailureError, UnsupportedPullbackError
from app.services.symmetry import (
    InvariantDivisor,
    LinearForm,
    OrbitIndex,
    SymSetup,
    basis_for,
    canonical_index,
    collect,
    expand,
)

PSI, INSIDE, CONTAINING, ZERO = 'psi', 'inside', 'containing', 'zero'


@dataclass(frozen=True)
class AttachingMap:
    ambient: GroundSet
    A: Tuple[int, ...]
    q: int

    def __post_init__(self):
        A = set(self.A)
        if not A.issubset(self.ambient.labels):
            raise UnsupportedPullbackError(f"A={sorted(A)} is not a subset of {self.ambient.labels}")
        if not 2 <= self.ambient.n - len(A) <= self.ambient.n - 2:
            raise UnsupportedPullbackError(f"need 2 <= |A^c| <= n-2, got |A^c|={self.ambient.n - len(A)}")
        if len(A) + 1 < 4:
            raise UnsupportedPullbackError("the target space needs at least 4 points")
        if self.q in self.ambient:
            raise UnsupportedPullbackError(f"q={self.q} must be a fresh label")

    @property
    def complement(self) -> Tuple[int, ...]:
        return tuple(p for p in self.ambient.labels if p not in self.A)

    @property
    def target(self) -> GroundSet:
        return GroundSet(tuple(sorted(self.A + (self.q,))))


def table_cases(attaching: AttachingMap, subset) -> List[str]:
    """Every case of the pullback table whose condition holds for B = subset."""
    B = frozenset(subset)
    A, Ac = frozenset(attaching.A), frozenset(attaching.complement)
    cases = []
    if B == A or B == Ac:
        cases.append(PSI)
    if B < A:
        cases.append(INSIDE)
    if B > Ac:
        cases.append(CONTAINING)
    return cases or [ZERO]


def pull_subset(attaching: AttachingMap, subset) -> Tuple[str, Optional[CanonSubset]]:
    """The case for delta_B and the canonical target subset it lands on (None for psi / zero)."""
    case, = table_cases(attaching, subset)
    if case == INSIDE:
        return case, canonicalize(subset, attaching.target)
    if case == CONTAINING:
        Ac = set(attaching.complement)
        return case, canonicalize([p for p in subset if p not in Ac] + [attaching.q], attaching.target)
    return case, None


def pullback(attaching: AttachingMap, divisor: BVector) -> BVector:
    if divisor.ground != attaching.ambient:
        raise UnsupportedPullbackError(
            f"divisor on {divisor.ground.labels}, map from {attaching.ambient.labels}")
    target = attaching.target
    acc: Dict[CanonSubset, Fraction] = {}

    def add(key: CanonSubset, value: Fraction):
        acc[key] = acc.get(key, Fraction(0)) + value

    for key, b in divisor.entries.items():
        if key.size == 1:
            point = key.members[0]
            if point not in attaching.A:
                raise UnsupportedPullbackError(f"psi_{point} sits on A^c; its pullback is not tabulated")
            add(key, b)
            continue
        case, image = pull_subset(attaching, key.members)
        if case == PSI:
            # c delta_B -> -c psi_q, and c = -b
            add(CanonSubset((attaching.q,)), b)
        elif image is not None:
            add(image, b)
    return BVector(target, acc)


def psi_nonnegativity(ground: GroundSet, point: int) -> bool:
    """psi at `point` meets every F-curve non-negatively."""
    psi = psi_class(point, ground)
    return all(f_intersection(psi, F) >= 0 for F in enumerate_f_partitions(ground))


def push_partition(attaching: AttachingMap, partition: FPartition) -> FPartition:
    """The F-partition of P whose curve is the image of `partition`: A^c joins the block of q."""
    if partition.ground != attaching.target:
        raise UnsupportedPullbackError("partition does not live on the target of the map")
    blocks = []
    for block in partition.blocks:
        if attaching.q in block:
            block = tuple(p for p in block if p != attaching.q) + attaching.complement
        blocks.append(block)
    return FPartition.of(blocks, attaching.ambient)


CUTS = ((1, 2), (1, 3), (2, 3))


class Reduction:
    """Restriction of an S_{n-3}-invariant class to the boundary where the cut points collide."""

    def __init__(self, setup: SymSetup, cut: Tuple[int, int]):
        if setup.m != setup.n - 3:
            raise UnsupportedPullbackError(f"reductions need m = n-3, got {setup}")
        if tuple(cut) not in CUTS:
            raise UnsupportedPullbackError(f"cut must be one of {CUTS}, got {cut}")
        self.setup = setup
        self.cut = tuple(cut)
        self.keep, = [p for p in (1, 2, 3) if p not in self.cut]
        n = setup.n
        self.map = AttachingMap(setup.ground, tuple(p for p in setup.ground.labels if p not in self.cut), n + 1)
        self.reduced_setup = SymSetup(n - 1, n - 3)
        self.to_reduced = {self.keep: 1, n + 1: 2}
        self.to_reduced.update({p: p - 1 for p in setup.permuted})
        self.from_reduced = {v: k for k, v in self.to_reduced.items()}

    def __repr__(self) -> str:
        return f"Reduction({self.setup}, cut={self.cut})"

    @property
    def corrected(self) -> bool:
        """Only the (2, 3) cut adds back the psi_q term."""
        return self.cut == (2, 3)

    def divisor(self, divisor: BVector) -> BVector:
        pulled = pullback(self.map, divisor)
        if self.corrected:
            weight = -divisor.get(canonicalize(self.cut, self.setup.ground))
            pulled = pulled + weight * psi_class(self.map.q, self.map.target)
        return pulled

    def reduce(self, divisor: BVector) -> InvariantDivisor:
        moved = relabel(self.divisor(divisor), self.to_reduced, self.reduced_setup.ground)
        try:
            return collect(self.reduced_setup, moved)
        except ReductionFailureError as e:
            raise ReductionFailureError(f"{self}: {e}", orbit=e.orbit, value=e.value) from e

    def push_partition(self, partition: FPartition) -> FPartition:
        on_target = FPartition.of([[self.from_reduced[p] for p in block] for block in partition.blocks],
                                  self.map.target)
        return push_partition(self.map, on_target)

    def matrix(self) -> Dict[OrbitIndex, LinearForm]:
        """Each reduced basis coordinate as a form in the original coordinates."""
        columns = {}
        for index in basis_for(self.setup):
            unit = expand(InvariantDivisor(self.setup, {index: 1}))
            columns[index] = self.reduce(unit)
        return {
            r: LinearForm(self.setup, {o: columns[o].get(r) for o in columns})
            for r in basis_for(self.reduced_setup)
        }


class ReductionResult(NamedTuple):
    reduction: Reduction
    divisor: BVector
    invariant: InvariantDivisor


def reduction_divisors(divisor: Union[InvariantDivisor, BVector],
                       setup: Optional[SymSetup] = None) -> Tuple[ReductionResult, ReductionResult, ReductionResult]:
    """The three restrictions used to reduce m = n-3 to m = n-2."""
    if isinstance(divisor, InvariantDivisor):
        setup, raw = divisor.setup, expand(divisor)
    else:
        if setup is None:
            raise UnsupportedPullbackError("a raw b-vector needs its SymSetup")
        raw = divisor
    if setup.m != setup.n - 3:
        raise UnsupportedPullbackError(f"reductions need m = n-3, got {setup}")
    key = canonical_index(setup, 2, (2, 3))
    weight = -raw.get(canonicalize((2, 3), setup.ground))
    if weight < 0:
        raise ReductionFailureError(f"coefficient {key} = {weight} must be non-negative", orbit=key, value=weight)
    results = []
    for cut in CUTS:
        reduction = Reduction(setup, cut)
        results.append(ReductionResult(reduction, reduction.divisor(raw), reduction.reduce(raw)))
    return tuple(results)
