import pandas as pd
from pathlib import Path
from typing import Dict, List, Optional

from app.config import get_settings
from app.services.cone import ContainmentReport, FarkasCertificate, HalfspaceSystem
from app.services.serialization import dumps, fmt, system_to_dict


class SystemExporter:
    def __init__(self, output_dir: Optional[Path] = None):
        self.output_dir = Path(output_dir) if output_dir is not None else get_settings().output_dir

    def system_frame(self, system: HalfspaceSystem) -> pd.DataFrame:
        """One row per inequality, one column per basis coordinate; entries stay exact p/q strings."""
        columns = [b.label() for b in system.basis]
        rows = []
        for j, form in enumerate(system.forms):
            row = {label: fmt(c) for label, c in zip(columns, form.row(system.basis))}
            row['index'] = j
            row['orbit_partitions'] = '; '.join(o.label() for o in system.provenance[j])
            rows.append(row)
        return pd.DataFrame(rows, columns=['index', 'orbit_partitions'] + columns)

    def certificate_frame(self, system: HalfspaceSystem, report: ContainmentReport) -> pd.DataFrame:
        rows = []
        for target, outcome in report.outcomes.items():
            if not isinstance(outcome, FarkasCertificate):
                rows.append({'target': target.label(), 'outcome': 'counterexample',
                             'inequality': None, 'orbit_partition': None, 'coeff': fmt(outcome.value)})
                continue
            for j, weight in sorted(outcome.multipliers.items()):
                rows.append({'target': target.label(), 'outcome': 'certificate', 'inequality': j,
                             'orbit_partition': system.provenance[j][0].label(), 'coeff': fmt(weight)})
        return pd.DataFrame(rows, columns=['target', 'outcome', 'inequality', 'orbit_partition', 'coeff'])

    def h_representation(self, system: HalfspaceSystem) -> str:
        """One inequality per line, space-separated coefficients in basis order; ">= 0" is implied."""
        lines = [' '.join(fmt(c) for c in row) for row in system.matrix()]
        return '\n'.join(lines) + '\n'

    def export(self, system: HalfspaceSystem, stem: Optional[str] = None,
               xlsx: Optional[Path] = None,
               report: Optional[ContainmentReport] = None) -> Dict[str, Path]:
        """Write the JSON system and its H-representation, and optionally an Excel workbook."""
        stem = stem or f"system_n{system.setup.n}_m{system.setup.m}"
        self.output_dir.mkdir(parents=True, exist_ok=True)

        paths = {
            'json': self.output_dir / f"{stem}.json",
            'hrep': self.output_dir / f"{stem}.ine",
        }
        paths['json'].write_text(dumps(system_to_dict(system)))
        paths['hrep'].write_text(self.h_representation(system))

        if xlsx is not None:
            xlsx = Path(xlsx)
            xlsx.parent.mkdir(parents=True, exist_ok=True)
            with pd.ExcelWriter(xlsx, engine='openpyxl') as writer:
                self.system_frame(system).to_excel(writer, sheet_name='inequalities', index=False)
                self.basis_frame(system).to_excel(writer, sheet_name='basis', index=False)
                if report is not None:
                    self.certificate_frame(system, report).to_excel(writer, sheet_name='certificates', index=False)
            paths['xlsx'] = xlsx
        return paths

    def basis_frame(self, system: HalfspaceSystem) -> pd.DataFrame:
        return pd.DataFrame([{'column': k, 'i': b.i, 'T': ','.join(map(str, b.T)), 'label': b.label()}
                             for k, b in enumerate(system.basis)])

    def sweep_frame(self, reports: List[ContainmentReport]) -> pd.DataFrame:
        """Summary table of a batch run."""
        return pd.DataFrame([
            {'n': r.setup.n, 'm': r.setup.m, 'status': r.status, 'inequalities': r.system_size,
             'targets': len(r.outcomes), 'self_paired': len(r.self_paired)}
            for r in reports
        ])
