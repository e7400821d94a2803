"""CSV tables and JSON result records written by the command-line tools."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .exceptions import ValidationError

__all__ = ["ResultRecord", "write_csv", "read_csv"]


@dataclass
class ResultRecord:
    """One run's named outputs, each stored as ``{"value": ..., "unit": ...}``."""

    command: str
    config_hash: str
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def add(self, name: str, value, unit: str) -> None:
        if not isinstance(unit, str):
            raise ValidationError(f"output {name!r} needs a unit string")
        if isinstance(value, float) and not math.isfinite(value):
            value = str(value)
        self.outputs[name] = {"value": value, "unit": unit}

    def value(self, name: str):
        return self.outputs[name]["value"]

    def write(self, directory: Path) -> Path:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{self.command}.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        try:
            header = next(r)
        except StopIteration as exc:
            raise ValidationError(f"{path}: empty CSV") from exc
        return header, [row for row in r if row]
