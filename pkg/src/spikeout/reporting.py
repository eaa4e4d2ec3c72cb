"""Check verdicts and deterministic report serialization.

Reports never carry wall-clock fields; floats serialize via their shortest
round-trip representation.  Re-running an identical configuration therefore
produces byte-identical report files (only the enclosing timestamped
directory name differs).
"""

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CheckResult:
    """One named check: observed value vs. prediction at a tolerance."""

    name: str
    passed: bool
    observed: "float | None" = None
    predicted: "float | None" = None
    tolerance: "float | None" = None
    skipped: bool = False
    note: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "observed": _plain(self.observed),
            "predicted": _plain(self.predicted),
            "tolerance": _plain(self.tolerance),
            "skipped": bool(self.skipped),
            "note": self.note,
        }

    def summary_line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        parts = [f"[{status}] {self.name}"]
        if self.observed is not None:
            parts.append(f"observed={_fmt(self.observed)}")
        if self.predicted is not None:
            parts.append(f"predicted={_fmt(self.predicted)}")
        if self.tolerance is not None:
            parts.append(f"tolerance={_fmt(self.tolerance)}")
        if self.note:
            parts.append(f"({self.note})")
        return " ".join(parts)


@dataclass
class RunReport:
    """Aggregated scenario outcome: checks plus free-form stats tables."""

    scenario: str
    seed: int
    replications: int
    params: dict = field(default_factory=dict)
    checks: "list[CheckResult]" = field(default_factory=list)
    stats_rows: "list[dict]" = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed or c.skipped for c in self.checks)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "replications": self.replications,
            "params": _plain(self.params),
            "checks": [c.to_json() for c in self.checks],
            "tables": _plain(self.tables),
            "passed": self.passed,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_stats_csv(self, path) -> None:
        """Long-format stats: one row per statistic per sweep point per rep."""
        columns = sorted({key for row in self.stats_rows for key in row})
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(columns) + "\n")
            for row in self.stats_rows:
                fh.write(",".join(_csv_cell(row.get(col)) for col in columns) + "\n")


def _plain(value):
    """Recursively convert numpy scalars/arrays so json sees native types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)
