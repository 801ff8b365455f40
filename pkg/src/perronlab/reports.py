"""CSV and summary writers with platform-stable number rendering."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .fdsolve import format_float


def format_cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format_float(v)
    if hasattr(v, "item"):
        return format_cell(v.item())
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_cell(v) for v in row])
    return path


def summary_entry(suite: str, result) -> dict:
    worst = float(result.worst_metric)
    return {
        "suite": suite,
        "case": result.case,
        "pass": bool(result.passed),
        "worst_metric": None if math.isnan(worst) else worst,
    }


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path
