"""
S_m-invariant divisor classes.

S_m permutes the last m points; the first n-m points are fixed. An orbit of
boundary classes is named by (i, T): the delta_S with |S| = i and S meeting the
fixed labels in T, with (i, T) and (n-i, fixed - T) naming the same orbit.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from app.services.divisors import (
    BVector,
    FPartition,
    GroundSet,
    Rational,
    canonicalize,
)
from app.services.errors import ReductionFailureError, UnsupportedSymmetryError


@dataclass(frozen=True)
class SymSetup:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 4:
            raise UnsupportedSymmetryError(f"n must be at least 4, got {self.n}")
        if not self.n - 3 <= self.m <= self.n:
            raise UnsupportedSymmetryError(
                f"only S_m with n-3 <= m <= n is supported, got n={self.n}, m={self.m}")

    @property
    def fixed(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n - self.m + 1))

    @property
    def permuted(self) -> Tuple[int, ...]:
        return tuple(range(self.n - self.m + 1, self.n + 1))

    @property
    def ground(self) -> GroundSet:
        return GroundSet.standard(self.n)

    def __repr__(self) -> str:
        return f"SymSetup(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class OrbitIndex:
    i: int
    T: Tuple[int, ...]

    @property
    def key(self):
        return (self.i, len(self.T), self.T)

    def label(self) -> str:
        if not self.T:
            return f"[{self.i}]"
        return f"[{self.i}]_{{{','.join(map(str, self.T))}}}"

    def __repr__(self) -> str:
        return self.label()


def _is_valid(setup: SymSetup, i: int, T: Tuple[int, ...]) -> bool:
    return 2 <= i <= setup.n - 2 and len(T) <= i and i - len(T) <= setup.m


def canonical_index(setup: SymSetup, i: int, T: Iterable[int]) -> OrbitIndex:
    """Canonical name of the orbit (i, T); raises when the orbit is empty."""
    T = tuple(sorted(set(T)))
    if not set(T).issubset(setup.fixed):
        raise UnsupportedSymmetryError(f"T={T} is not a subset of the fixed labels {setup.fixed}")
    if not _is_valid(setup, i, T):
        raise UnsupportedSymmetryError(f"({i}, {T}) is not an orbit of boundary divisors for {setup}")
    partner = (setup.n - i, tuple(p for p in setup.fixed if p not in T))
    if i < partner[0]:
        return OrbitIndex(i, T)
    if i > partner[0]:
        return OrbitIndex(*partner)
    if not setup.fixed or 1 in T:
        return OrbitIndex(i, T)
    return OrbitIndex(*partner)


def try_index(setup: SymSetup, i: int, T: Iterable[int]) -> Optional[OrbitIndex]:
    """Like canonical_index but None for the degenerate sizes (|S| = 1 or n-1), which carry no coordinate."""
    T = tuple(sorted(set(T)))
    if not _is_valid(setup, i, T):
        return None
    return canonical_index(setup, i, T)


def is_self_paired(setup: SymSetup, index: OrbitIndex) -> bool:
    return 2 * index.i == setup.n


@lru_cache(maxsize=None)
def excluded_indices(setup: SymSetup) -> frozenset:
    """The orbits left out of the basis; their coefficients are identically zero."""
    raw = []
    if setup.m <= setup.n - 2:
        raw.append((2, (1, 2)))
    if setup.m == setup.n - 3:
        raw += [(2, (1, 3)), (3, (1, 2, 3))]
    found = set()
    for i, T in raw:
        index = try_index(setup, i, T)
        if index is not None:
            found.add(index)
    return frozenset(found)


def is_excluded(setup: SymSetup, index: OrbitIndex) -> bool:
    return index in excluded_indices(setup)


@lru_cache(maxsize=None)
def all_orbit_indices(setup: SymSetup) -> Tuple[OrbitIndex, ...]:
    found = set()
    for i in range(2, setup.n - 1):
        for r in range(len(setup.fixed) + 1):
            for T in combinations(setup.fixed, r):
                index = try_index(setup, i, T)
                if index is not None:
                    found.add(index)
    return tuple(sorted(found, key=lambda idx: idx.key))


@lru_cache(maxsize=None)
def basis_for(setup: SymSetup) -> Tuple[OrbitIndex, ...]:
    """The basis of S_m-invariant classes, in (i, |T|, T) order."""
    return tuple(idx for idx in all_orbit_indices(setup) if not is_excluded(setup, idx))


def orbit_of(setup: SymSetup, subset: Iterable[int]) -> Optional[OrbitIndex]:
    members = set(subset)
    return try_index(setup, len(members), [p for p in setup.fixed if p in members])


def orbit_members(setup: SymSetup, index: OrbitIndex) -> List[Tuple[int, ...]]:
    """Every subset S with |S| = i and S meeting the fixed labels in T."""
    free = index.i - len(index.T)
    return [tuple(sorted(index.T + extra)) for extra in combinations(setup.permuted, free)]


class InvariantDivisor:
    """Coordinates over the basis; excluded orbits never appear."""

    __slots__ = ('setup', '_coords')

    def __init__(self, setup: SymSetup, coords: Optional[Mapping[OrbitIndex, Rational]] = None):
        basis = set(basis_for(setup))
        clean = {}
        for index, value in (coords or {}).items():
            if index not in basis:
                if index in excluded_indices(setup):
                    raise UnsupportedSymmetryError(
                        f"{index.label()} is excluded from the basis for {setup} "
                        f"(its coefficient is zero by choice of basis)")
                raise UnsupportedSymmetryError(f"{index} is not a canonical basis index for {setup}")
            value = Fraction(value)
            if value != 0:
                clean[index] = value
        self.setup = setup
        self._coords = dict(sorted(clean.items(), key=lambda kv: kv[0].key))

    @classmethod
    def from_raw(cls, setup: SymSetup, coords: Mapping[Tuple[int, Tuple[int, ...]], Rational]) -> "InvariantDivisor":
        acc: Dict[OrbitIndex, Fraction] = {}
        for (i, T), value in coords.items():
            index = canonical_index(setup, i, T)
            acc[index] = acc.get(index, Fraction(0)) + Fraction(value)
        return cls(setup, acc)

    @property
    def coords(self) -> Mapping[OrbitIndex, Fraction]:
        return MappingProxyType(self._coords)

    def get(self, index: OrbitIndex) -> Fraction:
        return self._coords.get(index, Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvariantDivisor):
            return NotImplemented
        return self.setup == other.setup and dict(self._coords) == dict(other._coords)

    def __repr__(self) -> str:
        body = ", ".join(f"{k.label()}: {v}" for k, v in self._coords.items())
        return f"InvariantDivisor({self.setup}, {{{body}}})"


def expand(divisor: InvariantDivisor) -> BVector:
    """b_S = -[|S|]_{S & fixed}; each class {S, S^c} is written once."""
    setup = divisor.setup
    ground = setup.ground
    entries = {}
    for index, value in divisor.coords.items():
        for subset in orbit_members(setup, index):
            entries[canonicalize(subset, ground)] = -value
    return BVector(ground, entries)


def collect(setup: SymSetup, divisor: BVector) -> InvariantDivisor:
    """Inverse of expand for invariant, boundary-supported b-vectors."""
    if divisor.ground != setup.ground:
        raise ReductionFailureError(f"divisor lives on {divisor.ground.labels}, not on {setup}")
    psi = divisor.psi_part()
    if psi.entries:
        key, value = next(iter(psi.entries.items()))
        raise ReductionFailureError(f"psi entry at {key} cannot be collected into boundary orbits",
                                    orbit=key, value=value)
    coords = {}
    for index in all_orbit_indices(setup):
        values = {-divisor.get(canonicalize(subset, setup.ground)) for subset in orbit_members(setup, index)}
        if len(values) != 1:
            raise ReductionFailureError(f"coefficients on the orbit {index} are not constant: {sorted(values)}",
                                        orbit=index, value=sorted(values))
        value = values.pop()
        if value == 0:
            continue
        if is_excluded(setup, index):
            raise ReductionFailureError(f"excluded orbit {index} has nonzero coefficient {value}",
                                        orbit=index, value=value)
        coords[index] = value
    return InvariantDivisor(setup, coords)


class LinearForm:
    """A functional sum c_t [t] + constant on invariant coordinates."""

    __slots__ = ('setup', '_terms', 'constant')

    def __init__(self, setup: SymSetup, coefficients: Optional[Mapping[OrbitIndex, Rational]] = None,
                 constant: Rational = 0):
        valid = set(all_orbit_indices(setup))
        clean = {}
        for index, value in (coefficients or {}).items():
            if index not in valid:
                raise UnsupportedSymmetryError(f"{index} is not a canonical orbit index for {setup}")
            value = Fraction(value)
            if value != 0:
                clean[index] = value
        self.setup = setup
        self._terms = dict(sorted(clean.items(), key=lambda kv: kv[0].key))
        self.constant = Fraction(constant)

    @classmethod
    def from_raw(cls, setup: SymSetup, terms: Iterable[Tuple[Rational, int, Iterable[int]]]) -> "LinearForm":
        """Sum of c * [i]_T over raw (c, i, T); degenerate and excluded orbits count as zero."""
        acc: Dict[OrbitIndex, Fraction] = {}
        for coefficient, i, T in terms:
            index = try_index(setup, i, T)
            if index is None or is_excluded(setup, index):
                continue
            acc[index] = acc.get(index, Fraction(0)) + Fraction(coefficient)
        return cls(setup, acc)

    @property
    def coefficients(self) -> Mapping[OrbitIndex, Fraction]:
        return MappingProxyType(self._terms)

    def coefficient(self, index: OrbitIndex) -> Fraction:
        return self._terms.get(index, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms and self.constant == 0

    def projected(self) -> "LinearForm":
        """Drop the excluded orbits, whose coefficients are identically zero."""
        return LinearForm(self.setup, {k: v for k, v in self._terms.items()
                                       if not is_excluded(self.setup, k)}, self.constant)

    def evaluate(self, point: Union[InvariantDivisor, Mapping[OrbitIndex, Rational]]) -> Fraction:
        coords = point.coords if isinstance(point, InvariantDivisor) else point
        return self.constant + sum((c * Fraction(coords.get(k, 0)) for k, c in self._terms.items()),
                                   Fraction(0))

    def row(self, basis: Iterable[OrbitIndex]) -> List[Fraction]:
        return [self.coefficient(index) for index in basis]

    def _check(self, other: "LinearForm"):
        if self.setup != other.setup:
            raise UnsupportedSymmetryError(f"forms on {self.setup} and {other.setup} cannot be combined")

    def __add__(self, other: "LinearForm") -> "LinearForm":
        self._check(other)
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, Fraction(0)) + v
        return LinearForm(self.setup, acc, self.constant + other.constant)

    def __neg__(self) -> "LinearForm":
        return LinearForm(self.setup, {k: -v for k, v in self._terms.items()}, -self.constant)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + (-other)

    def __mul__(self, scalar: Rational) -> "LinearForm":
        scalar = Fraction(scalar)
        return LinearForm(self.setup, {k: scalar * v for k, v in self._terms.items()}, scalar * self.constant)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearForm):
            return NotImplemented
        return (self.setup == other.setup and dict(self._terms) == dict(other._terms)
                and self.constant == other.constant)

    def __hash__(self) -> int:
        return hash((self.setup, tuple(self._terms.items()), self.constant))

    def __repr__(self) -> str:
        parts = []
        for index, c in self._terms.items():
            sign = '-' if c < 0 else '+'
            magnitude = abs(c)
            coefficient = '' if magnitude == 1 else f"{magnitude}"
            parts.append(f"{sign} {coefficient}{index.label()}")
        if self.constant:
            parts.append(f"{'-' if self.constant < 0 else '+'} {abs(self.constant)}")
        text = ' '.join(parts) or '0'
        return text[2:] if text.startswith('+ ') else '-' + text[2:] if text.startswith('- ') else text


def coordinate_functional(setup: SymSetup, target: OrbitIndex) -> LinearForm:
    if target not in basis_for(setup):
        raise UnsupportedSymmetryError(f"{target} is not in the basis for {setup}")
    return LinearForm(setup, {target: 1})


@dataclass(frozen=True)
class OrbitPartition:
    """An S_m-orbit of F-partitions: four (block size, fixed content) pairs, sorted."""
    setup: SymSetup
    blocks: Tuple[Tuple[int, Tuple[int, ...]], ...]

    def label(self) -> str:
        parts = []
        for size, T in self.blocks:
            parts.append(f"{size}_{{{','.join(map(str, T))}}}" if T else str(size))
        return "(" + ", ".join(parts) + ")"

    def __repr__(self) -> str:
        return self.label()

    def representative(self) -> FPartition:
        free = iter(self.setup.permuted)
        blocks = []
        for size, T in self.blocks:
            blocks.append(list(T) + [next(free) for _ in range(size - len(T))])
        return FPartition.of(blocks, self.setup.ground)


def signature(setup: SymSetup, partition: FPartition) -> OrbitPartition:
    fixed = set(setup.fixed)
    return OrbitPartition(setup, tuple(sorted(
        (len(block), tuple(p for p in block if p in fixed)) for block in partition.blocks)))


@lru_cache(maxsize=None)
def enumerate_orbit_partitions(setup: SymSetup) -> Tuple[OrbitPartition, ...]:
    """All S_m-orbits of F-partitions, built from size compositions and fixed-label placements."""
    n, fixed = setup.n, setup.fixed
    found = set()
    for a in range(1, n - 2):
        for b in range(1, n - a - 1):
            for c in range(1, n - a - b):
                sizes = (a, b, c, n - a - b - c)
                for placement in product(range(4), repeat=len(fixed)):
                    contents = [tuple(p for p, slot in zip(fixed, placement) if slot == k) for k in range(4)]
                    if all(len(contents[k]) <= sizes[k] for k in range(4)):
                        found.add(tuple(sorted(zip(sizes, contents))))
    return tuple(OrbitPartition(setup, blocks) for blocks in sorted(found))


def orbit_form(orbit: OrbitPartition, project: bool = True) -> LinearForm:
    """The F-intersection of expand(D) with any member of the orbit, as a form in D."""
    setup = orbit.setup
    first, *others = orbit.representative().blocks
    terms = []
    for block in (first, *others):
        index = orbit_of(setup, block)
        if index is not None:
            terms.append((index, -1))
    for block in others:
        index = orbit_of(setup, first + block)
        if index is not None:
            terms.append((index, 1))
    acc: Dict[OrbitIndex, Fraction] = {}
    for index, c in terms:
        acc[index] = acc.get(index, Fraction(0)) + c
    form = LinearForm(setup, acc)
    return form.projected() if project else form


@lru_cache(maxsize=None)
def symmetrized_inequalities(setup: SymSetup) -> Tuple[Tuple[OrbitPartition, LinearForm], ...]:
    return tuple((orbit, orbit_form(orbit)) for orbit in enumerate_orbit_partitions(setup))
