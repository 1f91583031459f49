"""Deterministic output: JSON with round-trip floats, CSV, atomic writes.

Payload files carry only reproducible content. Timestamps and run times go
to separate ``*.meta.json`` files so reruns of the same configuration give
byte-identical payloads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
import time
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy and complex values to JSON-compatible objects."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_plain(float(obj.real)), "im": to_plain(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj: Any) -> str:
    """Sorted, indented JSON; floats use the shortest round-trip representation."""
    return json.dumps(to_plain(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_atomic(path: str | Path, text: str) -> Path:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_json(path: str | Path, obj: Any) -> Path:
    return write_atomic(path, dumps(obj))


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return write_atomic(path, csv_text(columns, rows))


def series_rows(series: dict) -> tuple[list[str], list[list[float]]]:
    columns = list(series)
    n = len(next(iter(series.values()))) if series else 0
    return columns, [[series[c][k] for c in columns] for k in range(n)]


def write_metadata(path: str | Path, started: float, extra: dict | None = None) -> Path:
    meta = {
        "started_unix": started,
        "wall_time_s": time.time() - started,
        "python": platform.python_version(),
        "numpy": np.__version__,
        **(extra or {}),
    }
    return write_json(path, meta)
