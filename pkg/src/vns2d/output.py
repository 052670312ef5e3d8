"""File outputs: time-series CSV, binary field snapshots, summary JSON.

The CSV column order is fixed (see diagnostics.CSV_COLUMNS); float cells
use shortest round-trip formatting so a re-run with the same seed is
byte-identical.  Snapshots are raw row-major little-endian float64 payloads
with a JSON sidecar describing layout and field order.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .diagnostics import CSV_COLUMNS, CSV_COLUMNS_INHOMOGENEOUS

__all__ = [
    "write_timeseries",
    "read_timeseries",
    "write_field_snapshot",
    "read_field_snapshot",
    "write_summary",
]


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def write_timeseries(rows, path: str, inhomogeneous: bool = False) -> str:
    cols = CSV_COLUMNS_INHOMOGENEOUS if inhomogeneous else CSV_COLUMNS
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row.as_csv_values(inhomogeneous)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_timeseries(path: str) -> dict[str, np.ndarray]:
    """Columns of a written CSV as float arrays keyed by header name."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, i] for i, name in enumerate(header)}


def write_field_snapshot(
    out_dir: str,
    index: int,
    time: float,
    fields: dict[str, np.ndarray],
    grid_n: int,
    length: float,
) -> tuple[str, str]:
    """Write named fields as one concatenated f64le payload plus sidecar."""
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, f"fields_{index:06d}")
    names = list(fields)
    payload = b"".join(
        np.ascontiguousarray(fields[name], dtype="<f8").tobytes() for name in names
    )
    bin_path = base + ".f64"
    with open(bin_path, "wb") as fh:
        fh.write(payload)
    sidecar = {
        "time": time,
        "grid_n": grid_n,
        "length": length,
        "field_names": names,
        "dtype": "f64le",
        "layout": "row-major",
    }
    json_path = base + ".json"
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=1)
        fh.write("\n")
    return bin_path, json_path


def read_field_snapshot(bin_path: str) -> tuple[dict, dict[str, np.ndarray]]:
    json_path = os.path.splitext(bin_path)[0] + ".json"
    with open(json_path) as fh:
        meta = json.load(fh)
    n = meta["grid_n"]
    raw = np.fromfile(bin_path, dtype="<f8")
    per_field = n * n
    if raw.size != per_field * len(meta["field_names"]):
        raise ValueError(
            f"snapshot payload size {raw.size} does not match sidecar "
            f"({len(meta['field_names'])} fields of {per_field})"
        )
    fields = {}
    for i, name in enumerate(meta["field_names"]):
        fields[name] = raw[i * per_field : (i + 1) * per_field].reshape(n, n)
    return meta, fields


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_summary(summary: dict, path: str) -> str:
    with open(path, "w") as fh:
        json.dump(_json_safe(summary), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path
