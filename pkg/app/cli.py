#!/usr/bin/env python3
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from app.config import get_settings
from app.services.cone import (
    all_setups,
    build_system,
    dual_cross_check,
    verify_effectivity,
    verify_many,
)
from app.services.divisors import is_f_nef
from app.services.errors import InputFormatError, SolverError, VerificationError
from app.services.exporter import SystemExporter
from app.services.mori import MoriCase, mori_check
from app.services.pullback import AttachingMap, pullback
from app.services.replay import replay
from app.services.serialization import (
    divisor_from_text,
    divisor_to_dict,
    dual_check_to_dict,
    dumps,
    mori_to_dict,
    read_text,
    report_to_dict,
    script_to_dict,
    write_json,
)
from app.services.symmetry import SymSetup

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def _labels(text: str) -> List[int]:
    try:
        return [int(p) for p in text.split(',') if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated labels, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Verify F-nef divisor statements on M_0,n')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fnef-check', help='Test a divisor file for F-nefness')
    p.add_argument('file', help='Divisor JSON file')

    p = sub.add_parser('pullback', help='Pull a divisor back along a boundary attaching map')
    p.add_argument('file', help='Divisor JSON file on 1..n')
    p.add_argument('--A', dest='A', type=_labels, required=True, help='Kept labels, e.g. 1,2,3,4')
    p.add_argument('--q', type=int, required=True, help='Fresh label of the attaching point')
    p.add_argument('--output', '-o', help='Where to write the pulled-back divisor')

    p = sub.add_parser('verify', help='Certify effectivity of the symmetrized F-nef cone')
    p.add_argument('--n', type=int)
    p.add_argument('--m', type=int)
    p.add_argument('--all', action='store_true', help='Sweep every (n, m) with 4 <= n <= NMAX')
    p.add_argument('--nmax', type=int, default=9)
    p.add_argument('--output', '-o', help='Output directory for reports')
    p.add_argument('--cross-check', action='store_true',
                   help='Also enumerate extreme rays by double description (n <= FNEF_DD_MAX_N)')

    p = sub.add_parser('replay', help='Replay the coefficient-positivity argument')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--emit-script', help='Write the proof script JSON here')

    p = sub.add_parser('mori', help='Run the genus-zero reduction for a Mori cone case')
    p.add_argument('--g', type=int, required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--report', help='Write the pipeline report JSON here')

    p = sub.add_parser('export-system', help='Dump the symmetrized inequality system')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--output', '-o', help='Output directory')
    p.add_argument('--xlsx', help='Also write an Excel workbook here')
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'verify' and not args.all and (args.n is None or args.m is None):
        parser.error('verify needs --n and --m, or --all')
    return args


def run_fnef_check(args) -> int:
    print(f"Reading divisor file: {args.file}")
    divisor = divisor_from_text(read_text(args.file), source=args.file)
    result = is_f_nef(divisor)
    if result.is_nef:
        print(f"F-nef: every F-curve on n={divisor.ground.n} meets the divisor non-negatively")
        return EXIT_OK
    print("Not F-nef")
    print(f"- witness: {result.witness}")
    print(f"- intersection: {result.value}")
    return EXIT_FAILED


def run_pullback(args) -> int:
    divisor = divisor_from_text(read_text(args.file), source=args.file)
    attaching = AttachingMap(divisor.ground, tuple(sorted(args.A)), args.q)
    pulled = divisor_to_dict(pullback(attaching, divisor))
    if args.output:
        write_json(pulled, args.output)
        print(f"Pullback written to: {args.output}")
    else:
        print(dumps(pulled), end='')
    return EXIT_OK


def _write_report(setup: SymSetup, report, output_dir: Path) -> Path:
    path = output_dir / f"report_n{setup.n}_m{setup.m}.json"
    write_json(report_to_dict(report, build_system(setup)), path)
    return path


def run_verify(args) -> int:
    settings = get_settings()
    output_dir = Path(args.output) if args.output else settings.output_dir
    if args.all:
        setups = all_setups(args.nmax)
        print(f"Verifying {len(setups)} setups up to n={args.nmax}...")
        reports = verify_many(setups)
    else:
        setups = [SymSetup(args.n, args.m)]
        print(f"Verifying n={args.n}, m={args.m}...")
        reports = [verify_effectivity(setups[0])]

    failed = False
    for setup, report in zip(setups, reports):
        path = _write_report(setup, report, output_dir)
        print(f"- {setup}: {report.status}, {report.system_size} inequalities, "
              f"{len(report.certificates())} certificates -> {path}")
        for target, ray in report.counterexamples().items():
            print(f"  counterexample for {target.label()}: {ray.point} (value {ray.value})")
        failed = failed or not report.contained
        if args.cross_check and setup.n <= settings.dd_max_n:
            check = dual_cross_check(setup)
            write_json(dual_check_to_dict(check), output_dir / f"rays_n{setup.n}_m{setup.m}.json")
            print(f"  double description: {len(check.rays)} rays, all coordinates >= 0: {check.all_nonnegative}")
            failed = failed or not check.all_nonnegative

    if args.all:
        print("\nSummary:")
        print(SystemExporter(output_dir).sweep_frame(reports).to_string(index=False))
    return EXIT_FAILED if failed else EXIT_OK


def run_replay(args) -> int:
    setup = SymSetup(args.n, args.m)
    print(f"Replaying the proof script for n={args.n}, m={args.m}...")
    report = replay(setup)
    result = report.result
    if args.emit_script:
        write_json(script_to_dict(report.script, result), args.emit_script)
        print(f"Script written to: {args.emit_script}")
    if not result.verified:
        print("Replay failed")
        if result.failing is not None:
            print(f"- step: {result.failing}")
        print(f"- reason: {result.reason}")
        if result.delta is not None:
            print(f"- delta: {result.delta}")
        return EXIT_FAILED
    print(f"Verified {len(report.script.derivations)} steps, {len(report.certificates)} goals")
    print(f"Note: {report.header()}")
    for position, flag in result.flags:
        print(f"- step {position}: {flag}")
    if not report.certificates_valid:
        print("Flattened certificates failed re-expansion")
        return EXIT_FAILED
    return EXIT_OK


def run_mori(args) -> int:
    case = MoriCase(args.g, args.n)
    print(f"Running the genus-zero reduction for g={case.g}, n={case.n} ({case.total} points)...")
    report = mori_check(case)
    print("Trusted assumptions:")
    for assumption in report.assumptions:
        print(f"- {assumption}")
    for level in report.levels:
        descent = 'ok' if level.descent_ok else 'FAILED'
        print(f"- k={level.setup.n}, m={level.setup.m}: {level.report.status}, descent {descent}")
    print(f"Verified: {report.verified} (strict reading: {report.strictly_verified})")
    if args.report:
        write_json(mori_to_dict(report), args.report)
        print(f"Report written to: {args.report}")
    return EXIT_OK if report.verified else EXIT_FAILED


def run_export_system(args) -> int:
    setup = SymSetup(args.n, args.m)
    system = build_system(setup)
    exporter = SystemExporter(Path(args.output) if args.output else None)
    print(f"Exporting {len(system)} inequalities for n={args.n}, m={args.m}...")
    paths = exporter.export(system, xlsx=Path(args.xlsx) if args.xlsx else None)
    print("\nSystem saved to:")
    for kind, path in paths.items():
        print(f"- {kind}: {path}")
    return EXIT_OK


COMMANDS = {
    'fnef-check': run_fnef_check,
    'pullback': run_pullback,
    'verify': run_verify,
    'replay': run_replay,
    'mori': run_mori,
    'export-system': run_export_system,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputFormatError as e:
        print(e.diagnostic(), file=sys.stderr)
        return EXIT_INPUT
    except SolverError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except VerificationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
