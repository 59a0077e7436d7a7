"""Deterministic CSV text: ``repr`` floats, comma separator, header row and an
optional config-hash comment line."""

from __future__ import annotations

import csv
import io
import math

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)) or v is None:
        return str(bool(v)) if v is not None else "None"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def csv_text(header, rows, config_hash: str | None = None) -> str:
    buf = io.StringIO()
    if config_hash:
        buf.write(f"# config {config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()
