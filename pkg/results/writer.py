import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict

from .report import PLOT_COLUMNS, ExperimentReport, Table


def format_cell(value) -> str:
    """CSV text for one cell; reals carry 17 significant digits"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, "item"):
        return _json_safe(value.item())
    if isinstance(value, Path):
        return value.name
    return value


class ResultWriter:
    """Single writer for the CSV tables and JSON summary of one run"""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.checksums: Dict[str, str] = {}

    def open(self):
        """Create the output directory"""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            print(f"✓ Output directory ready: {self.out_dir}")
        except OSError as e:
            print(f"✗ Cannot create output directory {self.out_dir}: {e}")
            raise

    def _write_rows(self, path: Path, columns, rows) -> Path:
        try:
            with path.open("w", newline="", encoding="utf-8") as f:
                w = csv.writer(f, lineterminator="\r\n")
                w.writerow(columns)
                for row in rows:
                    w.writerow([format_cell(cell) for cell in row])
        except OSError as e:
            raise OSError(e.errno, f"cannot write {path}: {e.strerror}") from e
        with path.open("rb") as f:
            self.checksums[path.name] = hashlib.sha256(f.read()).hexdigest()
        return path

    def write_table(self, table: Table) -> Path:
        """<name>.csv with one row per table row"""
        path = self.out_dir / f"{table.name}.csv"
        rows = ([row[c] for c in table.columns] for row in table.rows)
        return self._write_rows(path, table.columns, rows)

    def emit_plotdata(self, report: ExperimentReport) -> Path:
        """Long-format plotdata.csv; header only when the report has no points"""
        return self._write_rows(self.out_dir / "plotdata.csv", PLOT_COLUMNS, report.plotdata)

    def write_summary(self, report: ExperimentReport) -> Path:
        """summary.json with config hash, seed, verdicts, checks and file checksums"""
        path = self.out_dir / "summary.json"
        payload = {
            "kind": report.kind,
            "config_hash": report.config_hash,
            "seed": report.seed,
            "model_hash": report.model_hash,
            "verdicts": report.verdicts,
            "checks": report.checks,
            "files": dict(sorted(self.checksums.items())),
            "generated_at": datetime.now(timezone.utc).isoformat(),
        }
        try:
            with path.open("w", encoding="utf-8") as f:
                json.dump(_json_safe(payload), f, indent=2)
        except OSError as e:
            raise OSError(e.errno, f"cannot write {path}: {e.strerror}") from e
        return path

    def write_report(self, report: ExperimentReport):
        """Every table, then plot data, then the summary; records paths on the report"""
        self.open()
        for table in report.tables:
            report.files.append(self.write_table(table))
        report.files.append(self.emit_plotdata(report))
        report.files.append(self.write_summary(report))
        return report.files
