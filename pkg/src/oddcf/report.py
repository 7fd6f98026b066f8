"""Tabular run reports with CSV/JSON serialization shared by the drivers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field


def format_value(v) -> str:
    """Floats at 17 significant digits, everything else via str()."""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class ConvergenceReport:
    """Per-iteration error/ratio table plus scalar summary values."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add_row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        for key, val in self.summary.items():
            writer.writerow([f"# {key}", format_value(val)])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "columns": list(self.columns),
            "rows": [list(row) for row in self.rows],
            "summary": self.summary,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
