"""
File formats: pydantic models for the input documents and deterministic
dict/JSON renderings of every result. Rationals are always "p/q" strings.
"""

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, Field, ValidationError

from app.services.cone import (
    ContainmentReport,
    CounterexampleRay,
    DualCheck,
    FarkasCertificate,
    HalfspaceSystem,
)
from app.services.divisors import BVector, CanonSubset, GroundSet, canonicalize
from app.services.errors import InputFormatError, VerificationError
from app.services.mori import MoriReport
from app.services.replay import CheckResult, Derivation, ProofScript, ReplayReport
from app.services.symmetry import (
    InvariantDivisor,
    LinearForm,
    OrbitIndex,
    OrbitPartition,
    SymSetup,
    basis_for,
    canonical_index,
)

_RATIONAL = re.compile(r'^-?\d+(/\d+)?$')

Model = TypeVar('Model', bound=BaseModel)


class BoundaryEntry(BaseModel):
    subset: List[int]
    coeff: str


class PsiEntry(BaseModel):
    point: int
    coeff: str


class DivisorFile(BaseModel):
    n: int
    labels: Optional[List[int]] = None
    boundary: List[BoundaryEntry] = Field(default_factory=list)
    psi: List[PsiEntry] = Field(default_factory=list)


class CoordEntry(BaseModel):
    i: int
    T: List[int] = Field(default_factory=list)
    coeff: str


class InvariantFile(BaseModel):
    n: int
    m: int
    coords: List[CoordEntry] = Field(default_factory=list)


class TargetModel(BaseModel):
    i: int
    T: List[int] = Field(default_factory=list)


class MultiplierEntry(BaseModel):
    index: int
    orbit_partition: str = ''
    coeff: str


class CertificateFile(BaseModel):
    n: int
    m: int
    target: TargetModel
    multipliers: List[MultiplierEntry] = Field(default_factory=list)


def fmt(value: Union[int, Fraction]) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    text = str(text).strip()
    if not _RATIONAL.match(text):
        raise ValueError(f"{text!r} is not a rational of the form p/q")
    value = Fraction(text)
    return value


def _line_of(text: str, loc: Sequence[Union[str, int]]) -> int:
    """Best-effort line of a field path like ('boundary', 2, 'coeff') in the raw JSON."""
    pos, skip = 0, 0
    for part in loc:
        if isinstance(part, int):
            skip = part
            continue
        for _ in range(skip + 1):
            found = text.find(f'"{part}"', pos)
            if found < 0:
                return text.count('\n', 0, pos) + 1
            pos = found + 1
        skip = 0
    return text.count('\n', 0, max(pos - 1, 0)) + 1


def _field(loc: Sequence[Union[str, int]]) -> str:
    return '.'.join(str(p) for p in loc) or '<root>'


class _DuplicateKey(ValueError):
    def __init__(self, key: str):
        super().__init__(f"duplicate key {key!r}")
        self.key = key


def _no_duplicates(pairs):
    data = {}
    for key, value in pairs:
        if key in data:
            raise _DuplicateKey(key)
        data[key] = value
    return data


def load_model(text: str, model: Type[Model], source: str = '<input>') -> Model:
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as e:
        raise InputFormatError(e.msg, file=source, line=e.lineno, field='<json>') from e
    except _DuplicateKey as e:
        raise InputFormatError(str(e), file=source, line=_line_of(text, (e.key, 0, e.key)), field=e.key) from e
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first.get('loc', ())
        raise InputFormatError(first.get('msg', 'invalid value'), file=source,
                               line=_line_of(text, loc), field=_field(loc)) from e


def _rational_at(text: str, value: str, loc: Tuple, source: str) -> Fraction:
    try:
        return parse_rational(value)
    except (ValueError, ZeroDivisionError) as e:
        raise InputFormatError(str(e), file=source, line=_line_of(text, loc), field=_field(loc)) from e


def divisor_from_text(text: str, source: str = '<input>') -> BVector:
    """delta coefficients c_S become b_S = -c_S; psi coefficients are stored as they are."""
    doc = load_model(text, DivisorFile, source)
    return divisor_from_model(doc, text, source)


def divisor_from_model(doc: DivisorFile, text: str = '', source: str = '<input>') -> BVector:
    try:
        ground = GroundSet(tuple(doc.labels)) if doc.labels else GroundSet.standard(doc.n)
    except VerificationError as e:
        field = 'labels' if doc.labels else 'n'
        raise InputFormatError(str(e), file=source, line=_line_of(text, (field,)), field=field) from e
    if ground.n != doc.n:
        raise InputFormatError(f"n={doc.n} but {ground.n} labels are given", file=source,
                               line=_line_of(text, ('labels',)), field='labels')
    entries: Dict[CanonSubset, Fraction] = {}
    for k, entry in enumerate(doc.boundary):
        loc = ('boundary', k, 'subset')
        if not 2 <= len(set(entry.subset)) <= doc.n - 2 or len(set(entry.subset)) != len(entry.subset):
            raise InputFormatError(f"boundary subsets need 2 <= |S| <= n-2 distinct points, got {entry.subset}",
                                   file=source, line=_line_of(text, loc), field=_field(loc))
        try:
            key = canonicalize(entry.subset, ground)
        except VerificationError as e:
            raise InputFormatError(str(e), file=source, line=_line_of(text, loc), field=_field(loc)) from e
        if key in entries:
            raise InputFormatError(f"duplicate boundary class {key}", file=source,
                                   line=_line_of(text, loc), field=_field(loc))
        entries[key] = -_rational_at(text, entry.coeff, ('boundary', k, 'coeff'), source)
    for k, entry in enumerate(doc.psi):
        loc = ('psi', k, 'point')
        if entry.point not in ground:
            raise InputFormatError(f"point {entry.point} is not one of the labels {list(ground.labels)}", file=source,
                                   line=_line_of(text, loc), field=_field(loc))
        key = CanonSubset((entry.point,))
        if key in entries:
            raise InputFormatError(f"duplicate psi point {entry.point}", file=source,
                                   line=_line_of(text, loc), field=_field(loc))
        entries[key] = _rational_at(text, entry.coeff, ('psi', k, 'coeff'), source)
    return BVector(ground, entries)


def invariant_from_text(text: str, source: str = '<input>') -> InvariantDivisor:
    doc = load_model(text, InvariantFile, source)
    try:
        setup = SymSetup(doc.n, doc.m)
    except VerificationError as e:
        raise InputFormatError(str(e), file=source, line=_line_of(text, ('m',)), field='m') from e
    coords: Dict[OrbitIndex, Fraction] = {}
    for k, entry in enumerate(doc.coords):
        loc = ('coords', k, 'i')
        try:
            index = canonical_index(setup, entry.i, entry.T)
        except VerificationError as e:
            raise InputFormatError(str(e), file=source, line=_line_of(text, loc), field=_field(loc)) from e
        if index in coords:
            raise InputFormatError(f"duplicate coordinate {index.label()}", file=source,
                                   line=_line_of(text, loc), field=_field(loc))
        coords[index] = _rational_at(text, entry.coeff, ('coords', k, 'coeff'), source)
    try:
        return InvariantDivisor(setup, coords)
    except VerificationError as e:
        raise InputFormatError(str(e), file=source, line=_line_of(text, ('coords',)), field='coords') from e


def read_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputFormatError(e.strerror or str(e), file=str(path), line=0, field='<file>') from e


# rendering


def index_to_dict(index: OrbitIndex) -> Dict[str, Any]:
    return {'i': index.i, 'T': list(index.T)}


def divisor_to_dict(divisor: BVector) -> Dict[str, Any]:
    boundary, psi = [], []
    for key, b in divisor.entries.items():
        if key.size == 1:
            psi.append({'point': key.members[0], 'coeff': fmt(b)})
        else:
            boundary.append({'subset': list(key.members), 'coeff': fmt(-b)})
    data = {'n': divisor.ground.n, 'boundary': boundary, 'psi': psi}
    if divisor.ground != GroundSet.standard(divisor.ground.n):
        data['labels'] = list(divisor.ground.labels)
    return data


def invariant_to_dict(divisor: InvariantDivisor) -> Dict[str, Any]:
    return {
        'n': divisor.setup.n,
        'm': divisor.setup.m,
        'coords': [dict(index_to_dict(k), coeff=fmt(v)) for k, v in divisor.coords.items()],
    }


def form_to_dict(form: LinearForm) -> Dict[str, Any]:
    return {
        'form': repr(form),
        'terms': [dict(index_to_dict(k), coeff=fmt(v)) for k, v in form.coefficients.items()],
    }


def orbit_partition_to_dict(orbit: OrbitPartition) -> Dict[str, Any]:
    return {'label': orbit.label(), 'blocks': [[size, list(T)] for size, T in orbit.blocks]}


def system_to_dict(system: HalfspaceSystem) -> Dict[str, Any]:
    basis = system.basis
    return {
        'n': system.setup.n,
        'm': system.setup.m,
        'basis': [dict(index_to_dict(b), label=b.label()) for b in basis],
        'inequalities': [
            {
                'index': j,
                'form': repr(form),
                'coeffs': [fmt(c) for c in form.row(basis)],
                'orbit_partitions': [orbit_partition_to_dict(o) for o in system.provenance[j]],
            }
            for j, form in enumerate(system.forms)
        ],
        'trivial': [orbit_partition_to_dict(o) for o in system.trivial],
    }


def system_from_dict(data: Dict[str, Any]) -> HalfspaceSystem:
    setup = SymSetup(int(data['n']), int(data['m']))
    basis = [canonical_index(setup, b['i'], b['T']) for b in data['basis']]
    if tuple(basis) != basis_for(setup):
        raise InputFormatError("basis does not match the setup", field='basis')

    def orbit(entry) -> OrbitPartition:
        return OrbitPartition(setup, tuple((int(size), tuple(T)) for size, T in entry['blocks']))

    forms, provenance = [], []
    for row in data['inequalities']:
        coeffs = [parse_rational(c) for c in row['coeffs']]
        forms.append(LinearForm(setup, dict(zip(basis, coeffs))))
        provenance.append(tuple(orbit(o) for o in row['orbit_partitions']))
    trivial = tuple(orbit(o) for o in data.get('trivial', []))
    return HalfspaceSystem(setup, tuple(forms), tuple(provenance), trivial)


def certificate_to_dict(certificate: FarkasCertificate, system: HalfspaceSystem) -> Dict[str, Any]:
    target = index_to_dict(certificate.target) if certificate.target is not None \
        else form_to_dict(certificate.target_form)
    return {
        'n': certificate.setup.n,
        'm': certificate.setup.m,
        'target': target,
        'multipliers': [
            {'index': j, 'orbit_partition': system.provenance[j][0].label(), 'coeff': fmt(w)}
            for j, w in sorted(certificate.multipliers.items())
        ],
    }


def certificate_from_text(text: str, source: str = '<input>') -> FarkasCertificate:
    doc = load_model(text, CertificateFile, source)
    try:
        setup = SymSetup(doc.n, doc.m)
        target = canonical_index(setup, doc.target.i, doc.target.T)
    except VerificationError as e:
        raise InputFormatError(str(e), file=source, line=_line_of(text, ('target',)), field='target') from e
    multipliers = {}
    for k, entry in enumerate(doc.multipliers):
        multipliers[entry.index] = _rational_at(text, entry.coeff, ('multipliers', k, 'coeff'), source)
    return FarkasCertificate(setup, target, LinearForm(setup, {target: 1}), multipliers)


def counterexample_to_dict(ray: CounterexampleRay) -> Dict[str, Any]:
    return {'ray': invariant_to_dict(ray.point), 'value': fmt(ray.value)}


def report_to_dict(report: ContainmentReport, system: HalfspaceSystem) -> Dict[str, Any]:
    targets = []
    for index, outcome in report.outcomes.items():
        entry = {'target': dict(index_to_dict(index), label=index.label())}
        if isinstance(outcome, FarkasCertificate):
            entry['outcome'] = 'certificate'
            entry['multipliers'] = certificate_to_dict(outcome, system)['multipliers']
        else:
            entry['outcome'] = 'counterexample'
            entry.update(counterexample_to_dict(outcome))
        targets.append(entry)
    return {
        'n': report.setup.n,
        'm': report.setup.m,
        'status': report.status,
        'inequalities': report.system_size,
        'self_paired': [b.label() for b in report.self_paired],
        'targets': targets,
    }


def dual_check_to_dict(check: DualCheck) -> Dict[str, Any]:
    return {
        'n': check.setup.n,
        'm': check.setup.m,
        'all_nonnegative': check.all_nonnegative,
        'rays': [invariant_to_dict(r)['coords'] for r in check.rays],
        'lineality': [invariant_to_dict(r)['coords'] for r in check.lineality],
    }


def dumps(data: Any) -> str:
    """Stable key order and indentation so equal inputs give byte-identical output."""
    return json.dumps(data, sort_keys=True, indent=2) + '\n'


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data))
    return path


# proof scripts and pipelines


def derivation_to_dict(position: int, step: Derivation) -> Dict[str, Any]:
    entry: Dict[str, Any] = {
        'index': position,
        'kind': step.kind,
        'conclusion': form_to_dict(step.conclusion),
        'premises': [{'ref': ref, 'weight': fmt(w)} for ref, w in step.premises],
        'scale': fmt(step.scale),
    }
    if step.source is not None:
        entry['source'] = step.source
    if step.partition is not None:
        entry['partition'] = orbit_partition_to_dict(step.partition)
    if step.substitution:
        entry['substitution'] = [[_raw(a), _raw(b)] for a, b in step.substitution]
    if step.base:
        entry['base'] = step.base
    if step.flag:
        entry['flag'] = step.flag
    if step.note:
        entry['note'] = step.note
    if step.transfer is not None:
        t = step.transfer
        entry['transfer'] = {
            'cut': list(t.cut),
            'reduced_target': index_to_dict(t.reduced_target),
            'terms': [{'partition': [list(b) for b in p.blocks], 'weight': fmt(w)} for p, w in t.terms],
            'psi_premise': t.psi_premise,
        }
    return entry


def _raw(index) -> Dict[str, Any]:
    i, T = index
    return {'i': i, 'T': list(T)}


def script_to_dict(script: ProofScript, result: Optional[CheckResult] = None) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        'n': script.setup.n,
        'm': script.setup.m,
        'goals': [g.label() for g in script.goals],
        'derivations': [derivation_to_dict(p, step) for p, step in enumerate(script.derivations)],
        'identities': [
            {'name': ident.name, 'lhs': repr(ident.lhs), 'rhs': repr(ident.rhs)} for ident in script.identities
        ],
    }
    if result is not None:
        data['check'] = check_result_to_dict(result)
    return data


def check_result_to_dict(result: CheckResult) -> Dict[str, Any]:
    return {
        'verified': result.verified,
        'failing': result.failing,
        'reason': result.reason,
        'delta': repr(result.delta) if result.delta is not None else None,
        'flags': [{'step': p, 'flag': f} for p, f in result.flags],
        'unreached': [g.label() for g in result.unreached],
    }


def replay_to_dict(report: ReplayReport, system: HalfspaceSystem) -> Dict[str, Any]:
    return {
        'n': report.setup.n,
        'm': report.setup.m,
        'header': report.header(),
        'solver_steps': list(report.solver_steps),
        'check': check_result_to_dict(report.result),
        'certificates_valid': report.certificates_valid,
        'certificates': [certificate_to_dict(c, system) for c in report.certificates.values()],
    }


def mori_to_dict(report: MoriReport) -> Dict[str, Any]:
    return {
        'g': report.case.g,
        'n': report.case.n,
        'assumptions': list(report.assumptions),
        'verified': report.verified,
        'strictly_verified': report.strictly_verified,
        'levels': [
            {
                'k': level.setup.n,
                'm': level.setup.m,
                'status': level.report.status,
                'certificates_valid': level.certificates_valid,
                'inequalities': level.report.system_size,
                'descent': [
                    {
                        'glued': list(c.glued),
                        'generators': c.generators,
                        'f_nef': c.f_nef,
                        'invariant': c.invariant,
                        'expressible': c.expressible,
                        'detail': c.detail,
                    }
                    for c in level.descent
                ],
            }
            for level in report.levels
        ],
    }
