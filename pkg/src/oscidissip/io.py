"""CSV tables with ``#`` comment headers and a JSON metadata sidecar."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

FLOAT_FORMAT = "%.17g"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return FLOAT_FORMAT % v


def write_csv(path, columns: list[str], rows: Iterable, comments: Mapping | None = None) -> Path:
    """Write ``rows`` under a header line; ``comments`` become ``# key=value`` lines first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for key, value in (comments or {}).items():
        lines.append(f"# {key}={_fmt(value) if not isinstance(value, str) else value}")
    lines.append(",".join(columns))
    for row in rows:
        cells = [_fmt(v) for v in row]
        if len(cells) != len(columns):
            raise ValueError(f"row has {len(cells)} cells for {len(columns)} columns")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of :func:`write_csv` for numeric tables: (comments, columns, data)."""
    comments, header, data = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            comments[key] = value
        elif header is None:
            header = line.split(",")
        elif line:
            data.append([float(c) for c in line.split(",")])
    return comments, header or [], np.array(data, dtype=float).reshape(-1, len(header or []))


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if not math.isfinite(v) else v
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_sidecar(csv_path, metadata: Mapping) -> Path:
    """``<csv>.json`` with sorted keys; no timestamps, so reruns are byte-identical."""
    path = Path(str(csv_path) + ".json")
    path.write_text(json.dumps(_jsonable(dict(metadata)), sort_keys=True, indent=2) + "\n")
    return path
