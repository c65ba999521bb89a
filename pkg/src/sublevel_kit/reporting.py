"""Uniform check-report container with CSV / JSON serialization.

CSV carries one row per level with full double precision; JSON carries the
summary (tolerances, discrepancies, budgets, seed).  Serialization is
byte-deterministic for identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

from ._util import format_sig


@dataclass
class CheckReport:
    """Outcome of one verification run.

    rows are per-level records matching `columns`; summary is a flat dict of
    scalars (must include whatever the check promises, e.g.
    max_rel_discrepancy, levels, budget, seed).
    """

    name: str
    columns: list
    rows: list
    summary: dict
    tolerance: float
    passed: bool
    warnings: list = dc_field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(format_sig(v) for v in row) + "\n")

    def to_json(self, path):
        payload = {
            "check": self.name,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "summary": _jsonable(self.summary),
            "warnings": list(self.warnings),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):          # numpy scalar
        return obj.item()
    return obj
