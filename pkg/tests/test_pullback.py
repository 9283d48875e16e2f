from fractions import Fraction
from itertools import combinations

import pytest

from app.services.divisors import (
    BVector,
    CanonSubset,
    GroundSet,
    boundary_class,
    enumerate_f_partitions,
    f_intersection,
    is_f_nef,
    psi_class,
    relabel,
)
from app.services.errors import ReductionFailureError, UnsupportedPullbackError
from app.services.mori import f_nef_generators
from app.services.pullback import (
    CONTAINING,
    INSIDE,
    PSI,
    ZERO,
    CUTS,
    AttachingMap,
    Reduction,
    psi_nonnegativity,
    pull_subset,
    pullback,
    push_partition,
    reduction_divisors,
    table_cases,
)
from app.services.symmetry import InvariantDivisor, OrbitIndex, SymSetup, basis_for, expand


@pytest.fixture
def attaching():
    return AttachingMap(GroundSet.standard(6), (1, 2, 3, 4), 7)


def test_attaching_map_shape(attaching):
    assert attaching.complement == (5, 6)
    assert attaching.target == GroundSet((1, 2, 3, 4, 7))


@pytest.mark.parametrize("A, q", [((1, 2, 3, 4, 5), 7), ((1, 2), 7), ((1, 2, 3, 4), 3), ((1, 2, 3, 9), 7)])
def test_invalid_attaching_maps(A, q):
    with pytest.raises(UnsupportedPullbackError):
        AttachingMap(GroundSet.standard(6), A, q)


def test_table_cases(attaching):
    assert table_cases(attaching, [5, 6]) == [PSI]
    assert table_cases(attaching, [1, 2]) == [INSIDE]
    assert table_cases(attaching, [1, 5, 6]) == [CONTAINING]
    assert table_cases(attaching, [1, 5]) == [ZERO]


def test_pullback_of_each_case(attaching):
    g, target = attaching.ambient, attaching.target
    assert pullback(attaching, boundary_class([5, 6], g)) == psi_class(7, target) * -1
    assert pullback(attaching, boundary_class([1, 2], g)) == boundary_class([1, 2], target)
    assert pullback(attaching, boundary_class([1, 5, 6], g)) == boundary_class([1, 7], target)
    assert pullback(attaching, boundary_class([1, 5], g)) == BVector.zero(target)


def test_psi_on_the_kept_side_pulls_back_to_itself(attaching):
    assert pullback(attaching, psi_class(2, attaching.ambient)) == psi_class(2, attaching.target)


def test_psi_on_the_glued_side_is_rejected(attaching):
    with pytest.raises(UnsupportedPullbackError):
        pullback(attaching, psi_class(5, attaching.ambient))


def test_pullback_is_linear(attaching):
    g = attaching.ambient
    a = boundary_class([1, 2], g) * Fraction(2, 3)
    b = boundary_class([3, 5, 6], g) - psi_class(4, g)
    assert pullback(attaching, a + b) == pullback(attaching, a) + pullback(attaching, b)


def test_projection_formula_on_f_curves(attaching, rng):
    g = attaching.ambient
    divisor = BVector.zero(g)
    for partition in list(enumerate_f_partitions(g))[:20]:
        for block in partition.blocks:
            if 2 <= len(block) <= g.n - 2:
                divisor = divisor + boundary_class(block, g) * rng.randint(-3, 3)
    divisor = divisor + psi_class(1, g) * 2
    pulled = pullback(attaching, divisor)
    for partition in enumerate_f_partitions(attaching.target):
        assert f_intersection(pulled, partition) == f_intersection(divisor, push_partition(attaching, partition))


def test_pullback_keeps_f_nef_divisors_f_nef(attaching):
    g = attaching.ambient
    divisor = psi_class(1, g) + psi_class(3, g)
    assert is_f_nef(divisor).is_nef
    assert is_f_nef(pullback(attaching, divisor)).is_nef


def test_psi_classes_are_nonnegative_on_f_curves():
    assert psi_nonnegativity(GroundSet.standard(6), 1)
    assert psi_nonnegativity(GroundSet((1, 2, 3, 4, 7)), 7)


def test_reductions_only_for_three_fixed_points():
    with pytest.raises(UnsupportedPullbackError):
        Reduction(SymSetup(6, 4), (1, 2))
    with pytest.raises(UnsupportedPullbackError):
        Reduction(SymSetup(6, 3), (1, 4))


@pytest.mark.parametrize("cut", CUTS)
def test_reduction_matrix_is_the_coordinate_map(cut, rng):
    setup = SymSetup(7, 4)
    reduction = Reduction(setup, cut)
    assert reduction.reduced_setup == SymSetup(6, 4)
    divisor = InvariantDivisor(setup, {b: rng.randint(0, 5) for b in basis_for(setup)})
    reduced = reduction.reduce(expand(divisor))
    for r, form in reduction.matrix().items():
        assert form.evaluate(divisor) == reduced.get(r)


def test_reduction_divisors_give_three_invariant_classes(rng):
    setup = SymSetup(6, 3)
    divisor = InvariantDivisor(setup, {b: rng.randint(0, 4) for b in basis_for(setup)})
    results = reduction_divisors(divisor)
    assert [r.reduction.cut for r in results] == list(CUTS)
    for result in results:
        assert result.invariant.setup == SymSetup(5, 3)
        assert CanonSubset((7,)) not in result.divisor.entries


def boundary_subsets(ground):
    for size in range(2, ground.n - 1):
        yield from combinations(ground.labels, size)


@pytest.mark.parametrize("n", [5, 6, 7, 8])
def test_exactly_one_table_case_per_boundary_class(n):
    g = GroundSet.standard(n)
    for size in range(3, n - 1):
        for A in combinations(g.labels, size):
            attaching = AttachingMap(g, A, n + 1)
            for subset in boundary_subsets(g):
                assert len(table_cases(attaching, subset)) == 1
                complement = [p for p in g.labels if p not in subset]
                assert pull_subset(attaching, subset)[1] == pull_subset(attaching, complement)[1]


def sample_f_nef(n, count, rng):
    """Rejection sampling around random relabelings of invariant F-nef generators."""
    g = GroundSet.standard(n)
    generators = [expand(d) for d in f_nef_generators(SymSetup(n, n - 1)) if d.coords]
    subsets = list(boundary_subsets(g))
    samples = []
    for _ in range(200 * count):
        candidate = BVector.zero(g)
        for divisor in rng.sample(generators, min(3, len(generators))):
            image = rng.sample(g.labels, n)
            candidate = candidate + relabel(divisor, dict(zip(g.labels, image)), g) * rng.randint(1, 3)
        for subset in rng.sample(subsets, rng.randint(0, 2)):
            candidate = candidate + boundary_class(subset, g) * Fraction(rng.choice([-1, 1]), rng.choice([2, 4]))
        if is_f_nef(candidate).is_nef:
            samples.append(candidate)
            if len(samples) == count:
                break
    assert len(samples) == count
    return samples


@pytest.mark.parametrize("n", [5, 6, 7, pytest.param(8, marks=pytest.mark.slow)])
def test_pullback_keeps_sampled_f_nef_divisors_f_nef(n, rng):
    g = GroundSet.standard(n)
    samples = sample_f_nef(n, 50, rng)
    assert all(not divisor.psi_part().entries for divisor in samples)
    for glued in combinations(g.labels, 2):
        attaching = AttachingMap(g, tuple(p for p in g.labels if p not in glued), n + 1)
        for divisor in samples:
            assert is_f_nef(pullback(attaching, divisor)).is_nef


def test_reduction_fails_on_a_nonzero_excluded_coefficient():
    setup = SymSetup(7, 4)
    raw = expand(InvariantDivisor(setup, {OrbitIndex(2, ()): 1})) + boundary_class([1, 2, 3], setup.ground)
    with pytest.raises(ReductionFailureError) as info:
        reduction_divisors(raw, setup)
    assert info.value.orbit == OrbitIndex(2, (1, 2))


def test_zero_divisor_reduces_to_zero():
    setup = SymSetup(7, 4)
    results = reduction_divisors(InvariantDivisor(setup))
    assert all(r.divisor == BVector.zero(r.reduction.map.target) for r in results)
    assert all(r.invariant == InvariantDivisor(SymSetup(6, 4)) for r in results)
