from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

PLOT_COLUMNS = ("table", "x_name", "x", "series", "value")


@dataclass
class Table:
    """One CSV table: fixed column order, rows as dicts keyed by column"""
    name: str
    columns: Sequence[str]
    rows: List[Dict] = field(default_factory=list)

    def add(self, **row):
        missing = set(self.columns) - set(row)
        if missing:
            raise KeyError(f"row for {self.name} lacks columns {sorted(missing)}")
        self.rows.append(row)

    def plot_points(self, x_name: str, series: Sequence[str], label: str = None) -> List[Tuple]:
        """Long-format points (table, x_name, x, series, value) for the given value columns"""
        points = []
        for row in self.rows:
            for column in series:
                name = column if label is None else f"{row[label]}:{column}"
                points.append((self.name, x_name, row[x_name], name, row[column]))
        return points


@dataclass
class ExperimentReport:
    """Tables, plot data and summary of one experiment run"""
    kind: str
    config_hash: str
    seed: int = None
    model_hash: str = None
    tables: List[Table] = field(default_factory=list)
    plotdata: List[Tuple] = field(default_factory=list)
    verdicts: Dict[str, str] = field(default_factory=dict)
    checks: Dict[str, object] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)

    def table(self, name: str) -> Table:
        for table in self.tables:
            if table.name == name:
                return table
        raise KeyError(f"no table {name!r} in {self.kind} report")
