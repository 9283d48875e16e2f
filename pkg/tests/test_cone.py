import random
from fractions import Fraction

import pytest

from app.services.cone import (
    CONTAINED,
    CounterexampleRay,
    FarkasCertificate,
    all_setups,
    build_system,
    certify_nonnegative,
    dual_cross_check,
    slice_vertices,
    validate_certificate,
    validate_counterexample,
    verify_effectivity,
    verify_many,
)
from app.services.divisors import is_f_nef
from app.services.errors import UnsupportedSymmetryError
from app.services.logger import VerificationLogger
from app.services.serialization import certificate_to_dict, system_to_dict
from app.services.symmetry import InvariantDivisor, LinearForm, OrbitIndex, SymSetup, expand

TWO, THREE = OrbitIndex(2, ()), OrbitIndex(3, ())


def test_n6_system_matches_golden(s6, golden):
    assert system_to_dict(build_system(s6)) == golden("n6m6_system.json")


def test_n6_certificates_match_golden(s6, golden):
    system = build_system(s6)
    report = verify_effectivity(s6)
    expected = golden("n6m6_certificates.json")
    assert report.status == CONTAINED
    assert report.self_paired == (THREE,)
    for target, certificate in report.certificates().items():
        assert certificate_to_dict(certificate, system)["multipliers"] == expected[target.label()]


def test_certificates_re_expand_exactly(s6):
    system = build_system(s6)
    certificate = certify_nonnegative(system, TWO)
    assert certificate.multipliers == {0: Fraction(2, 5), 1: Fraction(1, 5)}
    assert certificate.combination(system) == LinearForm(s6, {TWO: 1})
    assert validate_certificate(system, certificate)


def test_tampered_certificates_are_rejected(s6):
    system = build_system(s6)
    certificate = certify_nonnegative(system, TWO)
    wrong_weight = FarkasCertificate(s6, TWO, certificate.target_form, {0: Fraction(1, 5), 1: Fraction(1, 5)})
    negative = FarkasCertificate(s6, TWO, certificate.target_form, {0: Fraction(-1), 1: Fraction(0)})
    out_of_range = FarkasCertificate(s6, TWO, certificate.target_form, {7: Fraction(1)})
    assert not validate_certificate(system, wrong_weight)
    assert not validate_certificate(system, negative)
    assert not validate_certificate(system, out_of_range)
    assert validate_certificate(system, certificate.scaled(3))


@pytest.mark.parametrize("terms", [[(-1, 2, ())], [(1, 2, ()), (-1, 3, ())]])
def test_non_implied_targets_give_counterexamples(s6, terms):
    system = build_system(s6)
    target = LinearForm.from_raw(s6, terms)
    outcome = certify_nonnegative(system, target)
    assert isinstance(outcome, CounterexampleRay)
    assert outcome.value < 0
    assert system.feasible(outcome.point)
    assert is_f_nef(expand(outcome.point)).is_nef
    assert validate_counterexample(system, outcome)


def test_targets_must_be_homogeneous_basis_forms(s6):
    system = build_system(s6)
    with pytest.raises(UnsupportedSymmetryError):
        certify_nonnegative(system, LinearForm(s6, {TWO: 1}, constant=1))
    with pytest.raises(UnsupportedSymmetryError):
        certify_nonnegative(system, LinearForm(SymSetup(5, 5), {TWO: 1}))


@pytest.mark.parametrize("setup", all_setups(7), ids=repr)
def test_small_setups_are_contained(setup):
    report = verify_effectivity(setup)
    system = build_system(setup)
    assert report.contained
    assert all(validate_certificate(system, c) for c in report.certificates().values())


@pytest.mark.slow
@pytest.mark.parametrize("setup", [s for s in all_setups(9) if s.n >= 8], ids=repr)
def test_larger_setups_are_contained(setup):
    assert verify_effectivity(setup).contained


def test_all_setups_enumeration():
    setups = all_setups(6)
    assert len(setups) == 12
    assert setups[0] == SymSetup(4, 1)
    assert setups[-1] == SymSetup(6, 6)


def test_verify_many_keeps_input_order():
    setups = [SymSetup(6, 6), SymSetup(5, 5), SymSetup(6, 3)]
    reports = verify_many(setups, n_jobs=1)
    assert [r.setup for r in reports] == setups
    assert all(r.contained for r in reports)


def test_slice_vertices_of_the_n6_cone(s6):
    vertices = slice_vertices(build_system(s6))
    expected = [
        InvariantDivisor(s6, {TWO: Fraction(1, 5), THREE: Fraction(3, 5)}),
        InvariantDivisor(s6, {TWO: Fraction(2, 5), THREE: Fraction(1, 5)}),
    ]
    assert len(vertices) == 2
    assert all(v in vertices for v in expected)


def test_dual_cross_check(s6):
    check = dual_cross_check(s6)
    assert check.all_nonnegative
    assert check.lineality == ()
    expected = [InvariantDivisor(s6, {TWO: 1, THREE: 3}), InvariantDivisor(s6, {TWO: 2, THREE: 1})]
    assert len(check.rays) == 2
    assert all(r in check.rays for r in expected)


@pytest.mark.parametrize("setup", all_setups(7), ids=repr)
def test_dual_cross_check_agrees_with_certificates(setup):
    check = dual_cross_check(setup)
    system = build_system(setup)
    assert check.all_nonnegative
    assert check.rays
    assert all(system.feasible(ray) and is_f_nef(expand(ray)).is_nef for ray in check.rays)
    assert verify_effectivity(setup).status == CONTAINED


def test_runs_are_logged(s6):
    verify_effectivity(s6)
    history = VerificationLogger().get_history("verify")
    assert history[-1]["parameters"] == {"n": 6, "m": 6}
    assert history[-1]["results"]["status"] == CONTAINED
    assert len(VerificationLogger().get_history("certify")) == 2


def test_random_multiplier_tampering_is_always_caught():
    rng = random.Random(11)
    pairs = []
    for setup in (SymSetup(6, 6), SymSetup(6, 5), SymSetup(7, 5), SymSetup(7, 4), SymSetup(6, 3)):
        system = build_system(setup)
        pairs += [(system, c) for c in verify_effectivity(setup).certificates().values()]
    assert all(validate_certificate(system, c) for system, c in pairs)
    for _ in range(100):
        system, certificate = rng.choice(pairs)
        j = rng.randrange(len(system.forms))
        multipliers = dict(certificate.multipliers)
        bump = Fraction(rng.randint(1, 5), rng.randint(1, 4)) * rng.choice([-1, 1])
        multipliers[j] = multipliers.get(j, Fraction(0)) + bump
        tampered = FarkasCertificate(certificate.setup, certificate.target, certificate.target_form, multipliers)
        assert not validate_certificate(system, tampered)
