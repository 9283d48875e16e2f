"""
Symbolic replay of the coefficient-positivity argument for S_m-invariant
F-nef divisors, m >= n-3.

A ProofScript is an ordered list of Derivations. Axioms are symmetrized
F-inequalities taken verbatim from build_system; every other step concludes a
form from earlier ones by an exact nonnegative combination (optionally divided
by a positive scale), a complement substitution, or a transfer through one of
the three boundary reductions of the m = n-3 case. `check` re-verifies every
step with exact arithmetic and never trusts the generator.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from app.services.cone import (
    FarkasCertificate,
    HalfspaceSystem,
    build_system,
    certify_nonnegative,
    validate_certificate,
)
from app.services.divisors import FPartition, f_intersection, psi_class
from app.services.errors import SolverError, UnsupportedSymmetryError, VerificationError
from app.services.logger import VerificationLogger
from app.services.pullback import CUTS, Reduction
from app.services.symmetry import (
    LinearForm,
    OrbitIndex,
    OrbitPartition,
    SymSetup,
    basis_for,
    orbit_form,
    signature,
)

AXIOM = 'axiom-F-inequality'
WEIGHTED_SUM = 'weighted-sum'
SUBSTITUTION = 'substitution'
INDUCTION_STEP = 'induction-step'
PULLBACK_TRANSFER = 'pullback-transfer'
KINDS = (AXIOM, WEIGHTED_SUM, SUBSTITUTION, INDUCTION_STEP, PULLBACK_TRANSFER)

SOLVER_WEIGHTS, SLACK = 'solver-weights', 'slack'

RawIndex = Tuple[int, Tuple[int, ...]]


@dataclass(frozen=True)
class Transfer:
    """A reduced-space certificate carried back along one reduction."""
    cut: Tuple[int, int]
    reduced_target: OrbitIndex
    terms: Tuple[Tuple[FPartition, Fraction], ...]
    psi_premise: Optional[int] = None


@dataclass(frozen=True)
class Derivation:
    kind: str
    conclusion: LinearForm
    premises: Tuple[Tuple[int, Fraction], ...] = ()
    scale: Fraction = Fraction(1)
    source: Optional[int] = None
    partition: Optional[OrbitPartition] = None
    substitution: Tuple[Tuple[RawIndex, RawIndex], ...] = ()
    base: str = ''
    transfer: Optional[Transfer] = None
    flag: Optional[str] = None
    allow_slack: bool = False
    note: str = ''


class Identity(NamedTuple):
    name: str
    lhs: LinearForm
    rhs: LinearForm


@dataclass(frozen=True)
class ProofScript:
    setup: SymSetup
    derivations: Tuple[Derivation, ...] = ()
    goals: Tuple[OrbitIndex, ...] = ()
    identities: Tuple[Identity, ...] = ()

    def replace(self, position: int, derivation: Derivation) -> "ProofScript":
        steps = list(self.derivations)
        steps[position] = derivation
        return ProofScript(self.setup, tuple(steps), self.goals, self.identities)


class CheckResult(NamedTuple):
    verified: bool
    failing: Optional[int] = None
    reason: str = ''
    delta: Optional[LinearForm] = None
    flags: Tuple[Tuple[int, str], ...] = ()
    unreached: Tuple[OrbitIndex, ...] = ()


def unit(setup: SymSetup, i: int, T: Iterable[int] = ()) -> LinearForm:
    """[i]_T as a form; zero when the orbit is degenerate or excluded."""
    return LinearForm.from_raw(setup, [(1, i, tuple(T))])


def named_partition(setup: SymSetup, *blocks: Tuple[int, Tuple[int, ...]]) -> Optional[OrbitPartition]:
    """The orbit (i_R, j_S, k_T, *): three named blocks, the fourth takes the rest."""
    used = [p for _, T in blocks for p in T]
    rest = (setup.n - sum(size for size, _ in blocks), tuple(p for p in setup.fixed if p not in used))
    full = list(blocks) + [rest]
    if len(set(used)) != len(used) or any(size < 1 or len(T) > size for size, T in full):
        return None
    return OrbitPartition(setup, tuple(sorted((size, tuple(sorted(T))) for size, T in full)))


class ClaimForms(NamedTuple):
    one: LinearForm
    two: LinearForm
    claim: LinearForm


def claim_forms(setup: SymSetup, k: int, alpha: int) -> ClaimForms:
    """The inequalities (1), (2) and their displayed difference for [k]_{alpha}."""
    if setup.m != setup.n - 2 or alpha not in setup.fixed or not 3 <= k <= setup.n - 3:
        raise UnsupportedSymmetryError(f"no claim for k={k}, alpha={alpha} on {setup}")
    a = (alpha,)
    one = LinearForm.from_raw(setup, [(2, k, a), (1, 2, ()), (-1, k - 1, a), (-1, k + 1, a)])
    if k == 3:
        two = orbit_form(named_partition(setup, (1, a), (1, ()), (1, ())))
        claim = LinearForm.from_raw(setup, [(3, 3, a), (-3, 2, a), (-1, 4, a)])
    else:
        two = LinearForm.from_raw(setup, [(k - 2, 2, a), (Fraction((k - 2) * (k - 3), 2), 2, ()), (-1, k - 1, a)])
        claim = LinearForm.from_raw(setup, [
            (2, k, a), (-(Fraction((k - 2) * (k - 3), 2) - 1), 2, ()), (-(k - 2), 2, a), (-1, k + 1, a)])
    return ClaimForms(one, two, claim)


@lru_cache(maxsize=None)
def reduction_matrix(setup: SymSetup, cut: Tuple[int, int]) -> Dict[OrbitIndex, LinearForm]:
    return Reduction(setup, cut).matrix()


class _Builder:
    def __init__(self, setup: SymSetup):
        self.setup = setup
        self.system = build_system(setup)
        self.form_index = {form: j for j, form in enumerate(self.system.forms)}
        self.steps: List[Derivation] = []
        self.identities: List[Identity] = []
        self.by_source: Dict[int, int] = {}
        self.facts: Dict[LinearForm, int] = {}

    def add(self, derivation: Derivation) -> int:
        self.steps.append(derivation)
        position = len(self.steps) - 1
        self.facts.setdefault(derivation.conclusion, position)
        return position

    def axiom(self, j: int, partition: Optional[OrbitPartition] = None) -> int:
        if j not in self.by_source:
            partition = partition or self.system.provenance[j][0]
            self.by_source[j] = self.add(Derivation(AXIOM, self.system.forms[j], source=j, partition=partition))
        return self.by_source[j]

    def axiom_for(self, *blocks) -> Optional[int]:
        orbit = named_partition(self.setup, *blocks)
        if orbit is None:
            raise VerificationError(f"{blocks} does not name a partition for {self.setup}")
        form = orbit_form(orbit)
        if form.is_zero():
            return None
        return self.axiom(self.form_index[form], orbit)

    def fact(self, i: int, T: Tuple[int, ...] = ()) -> Optional[int]:
        form = unit(self.setup, i, T)
        if form.is_zero():
            return None
        if form not in self.facts:
            raise VerificationError(f"no step concludes {form} >= 0 yet on {self.setup}")
        return self.facts[form]

    def combine(self, kind: str, conclusion: LinearForm, premises: Iterable[Tuple[Optional[int], Fraction]],
                **extra) -> int:
        acc: Dict[int, Fraction] = {}
        for ref, weight in premises:
            if ref is not None and weight != 0:
                acc[ref] = acc.get(ref, Fraction(0)) + Fraction(weight)
        return self.add(Derivation(kind, conclusion, tuple(sorted(acc.items())), **extra))

    def solver_step(self, conclusion: LinearForm, note: str) -> Optional[int]:
        outcome = certify_nonnegative(self.system, conclusion)
        if not isinstance(outcome, FarkasCertificate):
            return None
        premises = [(self.axiom(j), w) for j, w in outcome.multipliers.items()]
        return self.combine(WEIGHTED_SUM, conclusion, premises, flag=SOLVER_WEIGHTS, note=note)

    # chains

    def telescope(self, k: int, T: Tuple[int, ...], base: str, substitute: bool = False):
        """Sum the (1, k_T, i, *) inequalities and step from [k]_T to [k+1]_T."""
        n = self.setup.n
        premises = []
        for i in range(1, n - k - 1):
            ref = self.axiom_for((1, ()), (k, T), (i, ()))
            if substitute and ref is not None:
                pair = ((n - k - i - 1, ()), (k + i + 1, tuple(self.setup.fixed)))
                ref = self.combine(SUBSTITUTION, self.steps[ref].conclusion, [(ref, 1)], substitution=(pair,))
            premises.append((ref, 1))
        display = LinearForm.from_raw(self.setup, [(n - k, k + 1, T), (-(n - k - 2), k, T)])
        summed = self.combine(WEIGHTED_SUM, display, premises, note=f"sum over (1,{k}_{T},i,*)")
        target = unit(self.setup, k + 1, T)
        if target.is_zero():
            return
        self.combine(INDUCTION_STEP, target, [(summed, 1), (self.fact(k, T), n - k - 2)],
                     scale=Fraction(n - k), base=base)

    def mixed(self, k: int, alpha: int) -> int:
        n, a = self.setup.n, (alpha,)
        premises = [(self.axiom_for((1, ()), (k, a), (i, ())), 1) for i in range(1, n - k - 1)]
        display = LinearForm.from_raw(self.setup, [(n - k - 1, k + 1, a), (1, k + 1, (1, 2)), (-(n - k - 2), k, a)])
        return self.combine(WEIGHTED_SUM, display, premises, allow_slack=True,
                            note=f"sum over (1,{k}_{{{alpha}}},i,*)")

    def claim(self, k: int, alpha: int):
        setup, a = self.setup, (alpha,)
        forms = claim_forms(setup, k, alpha)
        one = self.axiom_for((k - 1, a), (1, ()), (1, ()))
        if k == 3:
            two = self.axiom_for((1, a), (1, ()), (1, ()))
        else:
            two = self.combine(WEIGHTED_SUM, forms.two,
                               [(self.axiom_for((k - 2 - i, a), (1, ()), (1, ())), i) for i in range(1, k - 2)],
                               note=f"weighted sum over ((k-2-i)_{{{alpha}}},1,1,*), k={k}")
        self.identities.append(Identity(f"claim k={k} alpha={alpha}: (1) - (2)", forms.one - forms.two, forms.claim))
        self.identities.append(Identity(f"claim k={k} alpha={alpha}: (1)", self.steps[one].conclusion, forms.one))
        self.identities.append(Identity(f"claim k={k} alpha={alpha}: (2)", self.steps[two].conclusion, forms.two))

        target = unit(setup, k, a)
        claimed = self.solver_step(forms.claim, f"claim k={k} alpha={alpha}")
        if claimed is None:
            if self.solver_step(target, f"[{k}]_{{{alpha}}} directly; the claim fails on the cone") is None:
                raise SolverError(f"{target} >= 0 is not certifiable on {setup}")
            return
        if k == 3:
            premises = [(claimed, 1), (self.fact(2, a), 3), (self.fact(4, a), 1)]
            scale = Fraction(3)
        else:
            premises = [(claimed, 1), (self.fact(2), Fraction((k - 2) * (k - 3), 2) - 1),
                        (self.fact(2, a), k - 2), (self.fact(k + 1, a), 1)]
            scale = Fraction(2)
        self.combine(INDUCTION_STEP, target, premises, scale=scale, base=f"[{setup.n - 2}]_{{{alpha}}} >= 0")

    def transfer(self, cut: Tuple[int, int]):
        setup = self.setup
        reduction = Reduction(setup, cut)
        reduced = reduction.reduced_setup
        reduced_script = script_for(reduced)
        reduced_system = build_system(reduced)
        psi_ref = self.fact(2, (2, 3)) if reduction.corrected else None
        psi_form = unit(setup, 2, (2, 3))
        for r, conclusion in reduction_matrix(setup, cut).items():
            if conclusion.is_zero() or conclusion in self.facts:
                continue
            certificate = flatten(reduced_script, r)
            terms, premises, psi_weight = [], [], Fraction(0)
            for j, weight in certificate.multipliers.items():
                partition = reduced_system.provenance[j][0].representative()
                terms.append((partition, weight))
                pushed = orbit_form(signature(setup, reduction.push_partition(partition)))
                if not pushed.is_zero():
                    premises.append((self.axiom(self.form_index[pushed]), weight))
                if reduction.corrected:
                    psi_weight += weight * f_intersection(psi_class(2, reduced.ground), partition)
            if psi_weight and psi_form.is_zero():
                raise VerificationError(f"{reduction} needs [2]_{{2,3}} but it is not a coordinate")
            premises.append((psi_ref, psi_weight))
            self.combine(PULLBACK_TRANSFER, conclusion, premises,
                         transfer=Transfer(cut, r, tuple(terms), psi_ref), note=f"{reduction}: {r.label()}")


def _build(setup: SymSetup) -> ProofScript:
    b = _Builder(setup)
    n, m = setup.n, setup.m
    if m == n:
        for k in range(1, n - 2):
            b.telescope(k, (), base="[1] = 0")
    elif m == n - 1:
        for k in range(1, n - 2):
            b.telescope(k, (1,), base="[1]_{1} = 0", substitute=True)
    elif m == n - 2:
        for k in range(2, n - 2):
            b.telescope(k, (1, 2), base="[2]_{1,2} = 0")
        for alpha in (1, 2):
            for k in range(1, n - 2):
                ref = b.mixed(k, alpha)
                if k == 1:
                    b.combine(INDUCTION_STEP, unit(setup, 2, (alpha,)), [(ref, 1)],
                              scale=Fraction(n - 2), base="[2]_{1,2} = 0")
        for alpha in (1, 2):
            for k in range(n - 3, 2, -1):
                b.claim(k, alpha)
    else:
        b.axiom_for((1, (1,)), (1, (2,)), (1, (3,)))
        for k in range(3, n - 2):
            b.telescope(k, (1, 2, 3), base="[3]_{1,2,3} = 0")
        if n >= 5:
            for cut in CUTS:
                b.transfer(cut)
    return ProofScript(setup, tuple(b.steps), basis_for(setup), tuple(b.identities))


@lru_cache(maxsize=None)
def script_for(setup: SymSetup) -> ProofScript:
    """The derivation chain proving every basis coordinate nonnegative on the F-nef cone."""
    return _build(setup)


def _combination(script: ProofScript, premises: Sequence[Tuple[int, Fraction]]) -> LinearForm:
    total = LinearForm(script.setup)
    for ref, weight in premises:
        total = total + weight * script.derivations[ref].conclusion
    return total


def _check_transfer(script: ProofScript, step: Derivation) -> str:
    setup, t = script.setup, step.transfer
    reduction = Reduction(setup, t.cut)
    reduced = reduction.reduced_setup
    reduced_total = LinearForm(reduced)
    pulled = LinearForm(setup)
    psi_form = unit(setup, 2, (2, 3))
    for partition, weight in t.terms:
        if weight < 0:
            return "negative reduced multiplier"
        reduced_form = orbit_form(signature(reduced, partition))
        if reduced_form not in build_system(reduced).forms:
            return f"{partition} is not a reduced F-inequality"
        reduced_total = reduced_total + weight * reduced_form
        pulled = pulled + weight * orbit_form(signature(setup, reduction.push_partition(partition)))
        if reduction.corrected:
            c = f_intersection(psi_class(2, reduced.ground), partition)
            if c < 0:
                return "psi_q meets a reduced F-curve negatively"
            pulled = pulled + (weight * c) * psi_form
    if reduced_total != LinearForm(reduced, {t.reduced_target: 1}):
        return f"reduced multipliers do not certify {t.reduced_target}"
    if pulled != step.conclusion:
        return "pushed-forward inequalities do not reproduce the conclusion"
    if reduction_matrix(setup, t.cut).get(t.reduced_target) != step.conclusion:
        return "conclusion is not the reduced coordinate in original coordinates"
    return ''


def _slack_ok(system: HalfspaceSystem, slack: LinearForm) -> bool:
    outcome = certify_nonnegative(system, slack)
    return isinstance(outcome, FarkasCertificate) and validate_certificate(system, outcome)


def check(script: ProofScript) -> CheckResult:
    setup = script.setup
    system = build_system(setup)
    flags = []
    for position, step in enumerate(script.derivations):
        def fail(reason: str, delta: Optional[LinearForm] = None) -> CheckResult:
            return CheckResult(False, position, reason, delta, tuple(flags))

        if step.kind not in KINDS:
            return fail(f"unknown kind {step.kind}")
        if step.conclusion.setup != setup or step.conclusion.constant != 0:
            return fail("conclusion is not a homogeneous form on this setup")
        if any(not 0 <= ref < position for ref, _ in step.premises):
            return fail("premises must refer to earlier steps")
        if any(weight < 0 for _, weight in step.premises):
            return fail("negative premise weight")

        if step.kind == AXIOM:
            if step.premises or step.source is None or not 0 <= step.source < len(system.forms):
                return fail("axiom without a system inequality")
            if system.forms[step.source] != step.conclusion:
                return fail("axiom differs from its system inequality",
                            step.conclusion - system.forms[step.source])
            if step.partition is not None and orbit_form(step.partition) != step.conclusion:
                return fail(f"axiom differs from the form of {step.partition.label()}")
            continue

        if step.kind == SUBSTITUTION:
            if len(step.premises) != 1 or step.premises[0][1] != 1 or not step.substitution:
                return fail("a substitution rewrites exactly one premise")
            for (i, T), (j, U) in step.substitution:
                if j != setup.n - i or set(U) != set(setup.fixed) - set(T):
                    return fail(f"[{i}]_{T} = [{j}]_{U} is not a complement identification")
            premise = script.derivations[step.premises[0][0]].conclusion
            if premise != step.conclusion:
                return fail("substitution changes the form", step.conclusion - premise)
            continue

        if step.scale <= 0:
            return fail("scale must be positive")
        if step.kind == INDUCTION_STEP and not step.base:
            return fail("induction step without a named base case")
        if step.kind == PULLBACK_TRANSFER:
            if step.transfer is None:
                return fail("transfer step without reduction data")
            reason = _check_transfer(script, step)
            if reason:
                return fail(reason)

        delta = step.scale * step.conclusion - _combination(script, step.premises)
        if not delta.is_zero():
            if step.allow_slack and _slack_ok(system, delta):
                flags.append((position, SLACK))
            else:
                return fail("weighted sum does not reproduce the conclusion", delta)
        if step.flag:
            flags.append((position, step.flag))

    for identity in script.identities:
        if identity.lhs != identity.rhs:
            return CheckResult(False, None, f"identity failed: {identity.name}", identity.lhs - identity.rhs,
                               tuple(flags))

    concluded = {step.conclusion for step in script.derivations}
    unreached = tuple(g for g in script.goals if LinearForm(setup, {g: 1}) not in concluded)
    if unreached:
        return CheckResult(False, None, "goals not reached: " + ", ".join(g.label() for g in unreached),
                           flags=tuple(flags), unreached=unreached)
    return CheckResult(True, flags=tuple(flags))


def flatten(script: ProofScript, goal: OrbitIndex) -> FarkasCertificate:
    """Accumulate the weights of every step down to the system inequalities."""
    setup = script.setup
    target = LinearForm(setup, {goal: 1})
    position = next((p for p, step in enumerate(script.derivations) if step.conclusion == target), None)
    if position is None:
        raise VerificationError(f"no step concludes {goal.label()} on {setup}")
    memo: Dict[int, Dict[int, Fraction]] = {}

    def weights(p: int) -> Dict[int, Fraction]:
        if p in memo:
            return memo[p]
        step = script.derivations[p]
        if step.kind == AXIOM:
            result = {step.source: Fraction(1)}
        else:
            result = {}
            for ref, w in step.premises:
                for j, v in weights(ref).items():
                    result[j] = result.get(j, Fraction(0)) + w * v / step.scale
        memo[p] = result
        return result

    multipliers = {j: v for j, v in sorted(weights(position).items()) if v != 0}
    return FarkasCertificate(setup, goal, target, multipliers)


class ReplayReport(NamedTuple):
    setup: SymSetup
    script: ProofScript
    result: CheckResult
    certificates: Dict[OrbitIndex, FarkasCertificate]
    certificates_valid: bool

    @property
    def solver_steps(self) -> Tuple[int, ...]:
        """Steps whose weights come from the LP engine; the rest is checked without it."""
        return tuple(sorted({p for p, flag in self.result.flags if flag in (SOLVER_WEIGHTS, SLACK)}))

    def header(self) -> str:
        if not self.solver_steps:
            return "replay is independent of the LP engine"
        return (f"replay is independent of the LP engine except for {len(self.solver_steps)} "
                f"step(s) discharged with solver weights: {list(self.solver_steps)}")


def replay(setup: SymSetup) -> ReplayReport:
    script = script_for(setup)
    result = check(script)
    certificates, valid = {}, result.verified
    if result.verified:
        system = build_system(setup)
        for goal in script.goals:
            certificates[goal] = flatten(script, goal)
        valid = all(validate_certificate(system, c) for c in certificates.values())
    VerificationLogger().log_operation(
        'replay',
        {'n': setup.n, 'm': setup.m},
        {'verified': result.verified, 'failing': result.failing, 'steps': len(script.derivations),
         'flags': len(result.flags), 'certificates_valid': valid},
    )
    return ReplayReport(setup, script, result, certificates, valid)
