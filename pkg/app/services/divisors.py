"""
Divisor classes on the moduli space of stable n-pointed genus-zero curves.

A class is stored as its b-vector: D = -sum_{|S|>=2} b_S delta_S + sum_i b_i psi_i,
with one entry per canonical subset (a boundary pair {S, S^c} or a singleton).
F-curves are indexed by partitions of the marked points into four blocks and
the F-intersection is b_I + b_J + b_K + b_L - b_{IJ} - b_{IK} - b_{IL}.
"""

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Tuple, Union

from app.services.errors import GroundSetMismatchError, InvalidSubsetError

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class GroundSet:
    """The marked points. Labels are 1..n unless a pullback target needs others."""
    labels: Tuple[int, ...]

    def __post_init__(self):
        if tuple(sorted(set(self.labels))) != tuple(self.labels):
            raise InvalidSubsetError(f"labels must be distinct and sorted: {self.labels}")
        if len(self.labels) < 4:
            raise InvalidSubsetError(f"a ground set needs at least 4 points, got {len(self.labels)}")

    @classmethod
    def standard(cls, n: int) -> "GroundSet":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def least(self) -> int:
        return self.labels[0]

    def __contains__(self, label: int) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class CanonSubset:
    members: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def key(self) -> Tuple[int, Tuple[int, ...]]:
        return (len(self.members), self.members)

    def __repr__(self) -> str:
        return "{" + ",".join(str(p) for p in self.members) + "}"


def canonicalize(subset: Iterable[int], ground: GroundSet) -> CanonSubset:
    """Canonical representative of {S, S^c}; singletons are kept as they are, sets of size n-1 are rejected."""
    members = frozenset(subset)
    if not members or not members.issubset(ground.labels):
        raise InvalidSubsetError(f"subset {sorted(members)} is empty or not in {ground.labels}")
    if len(members) == ground.n:
        raise InvalidSubsetError("the full point set does not index a class")
    if len(members) == 1:
        return CanonSubset(tuple(members))
    complement = frozenset(ground.labels) - members
    if len(complement) == 1:
        # complementing would land on a psi key
        raise InvalidSubsetError(
            f"subset {sorted(members)} has the one-point complement {sorted(complement)}; "
            f"size n-1 sets index no boundary class")
    if len(members) < len(complement) or (
            len(members) == len(complement) and ground.least in members):
        return CanonSubset(tuple(sorted(members)))
    return CanonSubset(tuple(sorted(complement)))


class BVector:
    """Immutable sparse b-vector with exact rational entries; absent keys are zero."""

    __slots__ = ('ground', '_entries')

    def __init__(self, ground: GroundSet, entries: Optional[Mapping[CanonSubset, Rational]] = None):
        clean: Dict[CanonSubset, Fraction] = {}
        for key, value in (entries or {}).items():
            if canonicalize(key.members, ground) != key:
                raise InvalidSubsetError(f"key {key} is not canonical for {ground.labels}")
            value = Fraction(value)
            if value != 0:
                clean[key] = value
        self.ground = ground
        self._entries = dict(sorted(clean.items(), key=lambda kv: kv[0].key))

    @classmethod
    def from_subsets(cls, ground: GroundSet, coefficients: Mapping[Tuple[int, ...], Rational]) -> "BVector":
        """Build from raw subsets, canonicalizing and accumulating coefficients."""
        acc: Dict[CanonSubset, Fraction] = {}
        for subset, value in coefficients.items():
            key = canonicalize(subset, ground)
            acc[key] = acc.get(key, Fraction(0)) + Fraction(value)
        return cls(ground, acc)

    @classmethod
    def zero(cls, ground: GroundSet) -> "BVector":
        return cls(ground)

    @property
    def entries(self) -> Mapping[CanonSubset, Fraction]:
        return MappingProxyType(self._entries)

    def get(self, key: CanonSubset) -> Fraction:
        return self._entries.get(key, Fraction(0))

    def boundary_part(self) -> "BVector":
        return BVector(self.ground, {k: v for k, v in self._entries.items() if k.size >= 2})

    def psi_part(self) -> "BVector":
        return BVector(self.ground, {k: v for k, v in self._entries.items() if k.size == 1})

    def _check(self, other: "BVector"):
        if self.ground != other.ground:
            raise GroundSetMismatchError(f"{self.ground.labels} != {other.ground.labels}")

    def __add__(self, other: "BVector") -> "BVector":
        self._check(other)
        acc = dict(self._entries)
        for key, value in other._entries.items():
            acc[key] = acc.get(key, Fraction(0)) + value
        return BVector(self.ground, acc)

    def __neg__(self) -> "BVector":
        return BVector(self.ground, {k: -v for k, v in self._entries.items()})

    def __sub__(self, other: "BVector") -> "BVector":
        return self + (-other)

    def __mul__(self, scalar: Rational) -> "BVector":
        scalar = Fraction(scalar)
        return BVector(self.ground, {k: scalar * v for k, v in self._entries.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, BVector):
            return NotImplemented
        return self.ground == other.ground and dict(self._entries) == dict(other._entries)

    def __hash__(self) -> int:
        return hash((self.ground, tuple(self._entries.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v}" for k, v in self._entries.items())
        return f"BVector(n={self.ground.n}, {{{body}}})"


def boundary_class(subset: Iterable[int], ground: GroundSet) -> BVector:
    """delta_S as a b-vector (b_S = -1)."""
    members = frozenset(subset)
    if not 2 <= len(members) <= ground.n - 2:
        raise InvalidSubsetError(f"boundary divisors need 2 <= |S| <= n-2, got |S|={len(members)}")
    return BVector(ground, {canonicalize(members, ground): -1})


def psi_class(label: int, ground: GroundSet) -> BVector:
    if label not in ground:
        raise InvalidSubsetError(f"label {label} is not a point of {ground.labels}")
    return BVector(ground, {CanonSubset((label,)): 1})


@dataclass(frozen=True)
class FPartition:
    ground: GroundSet
    blocks: Tuple[Tuple[int, ...], ...]

    @classmethod
    def of(cls, blocks: Iterable[Iterable[int]], ground: GroundSet) -> "FPartition":
        normalized = [tuple(sorted(block)) for block in blocks]
        if len(normalized) != 4 or any(not block for block in normalized):
            raise InvalidSubsetError("an F-partition has exactly 4 nonempty blocks")
        flat = sorted(p for block in normalized for p in block)
        if tuple(flat) != ground.labels:
            raise InvalidSubsetError(f"blocks {normalized} do not partition {ground.labels}")
        normalized.sort(key=lambda block: (len(block), block[0]))
        return cls(ground, tuple(normalized))

    def __repr__(self) -> str:
        return "(" + ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + ")"


def f_intersection(divisor: BVector, partition: FPartition) -> Fraction:
    if divisor.ground != partition.ground:
        raise GroundSetMismatchError(
            f"divisor on {divisor.ground.labels}, partition on {partition.ground.labels}")
    ground = divisor.ground
    first, *others = partition.blocks
    value = sum((divisor.get(canonicalize(block, ground)) for block in partition.blocks), Fraction(0))
    for block in others:
        value -= divisor.get(canonicalize(first + block, ground))
    return value


def enumerate_f_partitions(ground: GroundSet) -> Iterator[FPartition]:
    """Every unordered partition into 4 nonempty blocks, once, in a fixed order."""
    labels = ground.labels
    n = len(labels)
    blocks: List[List[int]] = []

    def place(index: int) -> Iterator[FPartition]:
        remaining = n - index
        if len(blocks) + remaining < 4:
            return
        if index == n:
            yield FPartition.of(blocks, ground)
            return
        label = labels[index]
        for block in blocks:
            block.append(label)
            yield from place(index + 1)
            block.pop()
        if len(blocks) < 4:
            blocks.append([label])
            yield from place(index + 1)
            blocks.pop()

    yield from place(0)


def f_values(divisor: BVector) -> List[Tuple[FPartition, Fraction]]:
    return [(F, f_intersection(divisor, F)) for F in enumerate_f_partitions(divisor.ground)]


class FNefResult(NamedTuple):
    is_nef: bool
    witness: Optional[FPartition] = None
    value: Optional[Fraction] = None


def is_f_nef(divisor: BVector) -> FNefResult:
    """F-nefness test; the first violating partition in enumeration order is reported."""
    for partition in enumerate_f_partitions(divisor.ground):
        value = f_intersection(divisor, partition)
        if value < 0:
            return FNefResult(False, partition, value)
    return FNefResult(True)


def relabel(divisor: BVector, mapping: Mapping[int, int], target: GroundSet) -> BVector:
    """Transport a b-vector along a bijection of labels onto `target`."""
    if sorted(mapping.get(p, p) for p in divisor.ground.labels) != list(target.labels):
        raise InvalidSubsetError(f"mapping {dict(mapping)} is not a bijection onto {target.labels}")
    return BVector(target, {
        canonicalize([mapping.get(p, p) for p in key.members], target): value
        for key, value in divisor.entries.items()
    })


def is_invariant(divisor: BVector, permuted: Iterable[int]) -> bool:
    """True when every permutation of `permuted` fixes the b-vector."""
    permuted = sorted(permuted)
    for a, b in zip(permuted, permuted[1:]):
        swap = {a: b, b: a}
        if relabel(divisor, swap, divisor.ground) != divisor:
            return False
    return True
