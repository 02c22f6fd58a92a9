"""Deterministic CSV and manifest writing.

CSV files are written atomically (temp file + rename) with floats
rendered at 17 significant digits, so identical results are identical
bytes.  Run metadata that would break byte-identity (timestamps, wall
time) goes into a separate JSON manifest.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path, header, rows) -> Path:
    """Write rows atomically; every float at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}")
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)
    return path


def write_manifest(path, payload: dict) -> Path:
    """Write run metadata as pretty JSON, atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    os.replace(tmp, path)
    return path
