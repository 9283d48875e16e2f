from fractions import Fraction
from itertools import combinations

import pytest

from app.services.divisors import (
    boundary_class,
    canonicalize,
    enumerate_f_partitions,
    f_intersection,
    is_f_nef,
    psi_class,
)
from app.services.errors import ReductionFailureError, UnsupportedSymmetryError
from app.services.mori import f_nef_generators
from app.services.symmetry import (
    InvariantDivisor,
    LinearForm,
    OrbitIndex,
    SymSetup,
    basis_for,
    canonical_index,
    collect,
    coordinate_functional,
    enumerate_orbit_partitions,
    excluded_indices,
    expand,
    is_self_paired,
    orbit_form,
    orbit_of,
    signature,
    symmetrized_inequalities,
)


def random_invariant(setup, rng):
    return InvariantDivisor(setup, {b: Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for b in basis_for(setup)})


@pytest.mark.parametrize("n, m", [(3, 3), (6, 2), (6, 7)])
def test_setup_range(n, m):
    with pytest.raises(UnsupportedSymmetryError):
        SymSetup(n, m)


def test_basis_full_symmetry(s6):
    assert basis_for(s6) == (OrbitIndex(2, ()), OrbitIndex(3, ()))
    assert basis_for(SymSetup(5, 5)) == (OrbitIndex(2, ()),)
    assert is_self_paired(s6, OrbitIndex(3, ()))
    assert not is_self_paired(s6, OrbitIndex(2, ()))


def test_basis_with_one_fixed_point():
    setup = SymSetup(6, 5)
    assert basis_for(setup) == (OrbitIndex(2, ()), OrbitIndex(2, (1,)), OrbitIndex(3, (1,)))
    assert canonical_index(setup, 4, ()) == OrbitIndex(2, (1,))
    assert canonical_index(setup, 3, ()) == OrbitIndex(3, (1,))


def test_excluded_orbits():
    assert excluded_indices(SymSetup(6, 6)) == frozenset()
    assert excluded_indices(SymSetup(6, 4)) == {OrbitIndex(2, (1, 2))}
    assert excluded_indices(SymSetup(6, 3)) == {
        OrbitIndex(2, (1, 2)), OrbitIndex(2, (1, 3)), OrbitIndex(3, (1, 2, 3))}
    assert OrbitIndex(2, (1, 2)) not in basis_for(SymSetup(6, 4))


def test_excluded_coordinate_is_rejected():
    setup = SymSetup(6, 4)
    with pytest.raises(UnsupportedSymmetryError):
        InvariantDivisor(setup, {OrbitIndex(2, (1, 2)): 1})


def test_canonical_index_rejects_empty_orbits():
    setup = SymSetup(6, 4)
    with pytest.raises(UnsupportedSymmetryError):
        canonical_index(setup, 2, (3,))
    with pytest.raises(UnsupportedSymmetryError):
        canonical_index(setup, 1, ())


def test_orbit_of_subsets():
    setup = SymSetup(6, 5)
    assert orbit_of(setup, [1, 2]) == OrbitIndex(2, (1,))
    assert orbit_of(setup, [2, 3, 4, 5]) == OrbitIndex(2, (1,))
    assert orbit_of(setup, [4]) is None


@pytest.mark.parametrize("n, m", [(6, 6), (6, 5), (6, 4), (7, 4), (7, 5)])
def test_expand_collect_are_inverse(n, m, rng):
    setup = SymSetup(n, m)
    divisor = random_invariant(setup, rng)
    assert collect(setup, expand(divisor)) == divisor


def test_collect_rejects_non_invariant_classes():
    setup = SymSetup(5, 5)
    with pytest.raises(ReductionFailureError) as info:
        collect(setup, boundary_class([1, 2], setup.ground))
    assert info.value.orbit == OrbitIndex(2, ())
    with pytest.raises(ReductionFailureError):
        collect(setup, psi_class(1, setup.ground))


def test_n6_full_symmetry_forms(s6):
    forms = [form for _, form in symmetrized_inequalities(s6)]
    assert forms == [
        LinearForm.from_raw(s6, [(3, 2, ()), (-1, 3, ())]),
        LinearForm.from_raw(s6, [(-1, 2, ()), (2, 3, ())]),
    ]


@pytest.mark.parametrize("n, m", [(6, 4), (7, 4), (7, 6)])
def test_orbit_forms_agree_with_f_intersections(n, m, rng):
    setup = SymSetup(n, m)
    divisor = random_invariant(setup, rng)
    raw = expand(divisor)
    orbits = set(enumerate_orbit_partitions(setup))
    for partition in enumerate_f_partitions(setup.ground):
        orbit = signature(setup, partition)
        assert orbit in orbits
        assert orbit_form(orbit).evaluate(divisor) == f_intersection(raw, partition)


def test_representatives_round_trip_through_signature():
    setup = SymSetup(7, 5)
    for orbit in enumerate_orbit_partitions(setup):
        assert signature(setup, orbit.representative()) == orbit


def test_linear_form_arithmetic(s6):
    a = LinearForm.from_raw(s6, [(3, 2, ()), (-1, 3, ())])
    b = LinearForm.from_raw(s6, [(-1, 2, ()), (2, 3, ())])
    total = Fraction(2, 5) * a + Fraction(1, 5) * b
    assert total == LinearForm(s6, {OrbitIndex(2, ()): 1})
    assert (a - a).is_zero()
    assert repr(a) == "3[2] - [3]"
    assert repr(b) == "-[2] + 2[3]"
    point = InvariantDivisor(s6, {OrbitIndex(2, ()): 1, OrbitIndex(3, ()): 2})
    assert a.evaluate(point) == 1


def test_from_raw_drops_excluded_and_degenerate_orbits():
    setup = SymSetup(6, 4)
    form = LinearForm.from_raw(setup, [(5, 2, (1, 2)), (1, 1, ()), (2, 3, (1,))])
    assert form == LinearForm(setup, {canonical_index(setup, 3, (1,)): 2})


def test_coordinate_functional_reads_one_coordinate(rng):
    setup = SymSetup(7, 5)
    divisor = random_invariant(setup, rng)
    for b in basis_for(setup):
        assert coordinate_functional(setup, b).evaluate(divisor) == divisor.coords.get(b, 0)
    with pytest.raises(UnsupportedSymmetryError):
        coordinate_functional(setup, OrbitIndex(2, (1, 2)))


def orbit_count(n, m):
    """Orbits (i, T) with 2 <= i <= n-2, counted once per complement pair, excluded ones removed."""
    fixed = tuple(range(1, n - m + 1))
    pairs = set()
    for i in range(2, n - 1):
        for r in range(len(fixed) + 1):
            for T in combinations(fixed, r):
                if r <= i and i - r <= m:
                    rest = tuple(p for p in fixed if p not in T)
                    pairs.add(frozenset({(i, T), (n - i, rest)}))
    dropped = []
    if m <= n - 2:
        dropped.append((2, (1, 2)))
    if m == n - 3:
        dropped += [(2, (1, 3)), (3, (1, 2, 3))]
    excluded = {pair for pair in pairs if any(d in pair for d in dropped)}
    return len(pairs - excluded)


@pytest.mark.parametrize("n", range(4, 11))
def test_basis_cardinalities(n):
    for m in range(n - 3, n + 1):
        assert len(basis_for(SymSetup(n, m))) == orbit_count(n, m)


def test_basis_for_two_fixed_points_on_eight():
    setup = SymSetup(8, 6)
    expected = {canonical_index(setup, i, T) for i in (2, 3, 4) for r in range(3) for T in combinations((1, 2), r)}
    expected.discard(OrbitIndex(2, (1, 2)))
    assert set(basis_for(setup)) == expected
    assert len(basis_for(setup)) == 9


def test_expand_respects_the_complement_identification():
    setup = SymSetup(6, 4)
    index = canonical_index(setup, 3, (1,))
    assert canonical_index(setup, 3, (2,)) == index
    raw = expand(InvariantDivisor(setup, {index: 1}))
    assert raw == expand(InvariantDivisor.from_raw(setup, {(3, (2,)): 1}))
    for subset in combinations(setup.ground.labels, 3):
        fixed_part = {p for p in subset if p in setup.fixed}
        expected = -1 if fixed_part in ({1}, {2}) else 0
        assert raw.get(canonicalize(subset, setup.ground)) == expected
    assert len(raw.entries) == 6


def test_expand_of_the_paired_orbit_is_the_same_divisor():
    setup = SymSetup(7, 5)
    assert expand(InvariantDivisor.from_raw(setup, {(2, ()): 1})) == \
        expand(InvariantDivisor.from_raw(setup, {(5, (1, 2)): 1}))


@pytest.mark.parametrize("n, m", [(5, 5), (5, 3), (6, 5), (6, 3), (7, 7), (7, 4),
                                  pytest.param(8, 7, marks=pytest.mark.slow)])
def test_f_nef_test_agrees_with_the_symmetrized_forms(n, m, rng):
    setup = SymSetup(n, m)
    forms = [form for _, form in symmetrized_inequalities(setup)]
    inside = [d for d in f_nef_generators(setup) if d.coords]
    points = [random_invariant(setup, rng) for _ in range(10)]
    points.append(InvariantDivisor(setup, {b: -1 for b in basis_for(setup)}))
    for _ in range(10):
        chosen = rng.sample(inside, min(3, len(inside)))
        coords = {}
        for divisor in chosen:
            weight = Fraction(rng.randint(1, 4), rng.randint(1, 3))
            for b, v in divisor.coords.items():
                coords[b] = coords.get(b, 0) + weight * v
        points.append(InvariantDivisor(setup, coords))
        points.append(InvariantDivisor(setup, {b: v + Fraction(rng.randint(-1, 1), 4) for b, v in coords.items()}))
    seen = set()
    for point in points:
        by_forms = all(form.evaluate(point) >= 0 for form in forms)
        assert is_f_nef(expand(point)).is_nef == by_forms
        seen.add(by_forms)
    assert seen == {True, False}
