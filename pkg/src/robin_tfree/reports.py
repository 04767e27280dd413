"""Machine-readable run reports (JSON) and plot-ready tables (CSV)."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .numerics import Interval

SCHEMA_VERSION = 1


def jsonable(value: Any) -> Any:
    """Recursively convert intervals, enums and dataclass-like objects to JSON types."""
    if isinstance(value, Interval):
        return value.to_json()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "value") and hasattr(value, "name"):  # Enum
        return value.value
    if isinstance(value, float) or isinstance(value, (int, str, bool)) or value is None:
        return value
    return str(value)


@dataclass
class VerificationReport:
    """Outcome of one verification run.

    ``metrics`` holds deterministic results; ``timing`` holds wall-clock data
    and is the only part allowed to differ between identical runs.
    """

    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_dict(self, config: dict | None = None) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "report": self.name,
            "passed": self.passed,
        }
        if config is not None:
            out["config"] = jsonable(config)
        out["metrics"] = jsonable(self.metrics)
        out["timing"] = jsonable(self.timing)
        return out


class Stopwatch:
    def __init__(self):
        self.started = time.perf_counter()
        self.stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def timing(self) -> dict:
        return {
            "generated_at": self.stamp,
            "elapsed_seconds": round(time.perf_counter() - self.started, 3),
        }


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    return path


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path
