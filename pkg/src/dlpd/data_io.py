"""CSV data files, JSON model files and tidy plot-data output.

Data files have a header row ``label,u1..ud,x1..xp`` followed by one row per
sample; ``label`` is ``X`` or ``Y`` and numbers are written with 17
significant digits so that a write/read cycle reproduces every value.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from .core import DataSet
from .exceptions import DataSchemaError

__all__ = [
    "format_number",
    "write_dataset",
    "read_dataset",
    "write_json",
    "read_json",
    "write_plot_data",
]

_COLUMN = re.compile(r"^([ux])([1-9][0-9]*)$")


def format_number(x) -> str:
    return format(float(x), ".17g")


def write_dataset(data: DataSet, path) -> None:
    header = (["label"] + [f"u{j + 1}" for j in range(data.d)]
              + [f"x{j + 1}" for j in range(data.p)])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for lab, u, x in zip(data.labels, data.covariates, data.features):
            w.writerow([lab] + [format_number(v) for v in u] + [format_number(v) for v in x])


def _parse_header(header, path):
    if not header or header[0].strip() != "label":
        raise DataSchemaError(f"{path}: line 1: first column must be 'label'")
    kinds = []
    for pos, name in enumerate(header[1:], start=2):
        m = _COLUMN.match(name.strip())
        if not m:
            raise DataSchemaError(f"{path}: line 1: column {pos} has unexpected name {name!r}")
        kinds.append((m.group(1), int(m.group(2))))
    d = sum(1 for k, _ in kinds if k == "u")
    p = len(kinds) - d
    expected = [("u", j + 1) for j in range(d)] + [("x", j + 1) for j in range(p)]
    if kinds != expected or d < 1 or p < 1:
        raise DataSchemaError(
            f"{path}: line 1: columns must be label, u1..ud, x1..xp with d, p >= 1")
    return d, p


def read_dataset(path) -> DataSet:
    """Read a data file, reporting schema violations with their line numbers."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None:
            raise DataSchemaError(f"{path}: file is empty")
        d, p = _parse_header(header, path)
        width = 1 + d + p
        labels, values = [], []
        for line, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataSchemaError(
                    f"{path}: line {line}: expected {width} fields, got {len(row)}")
            lab = row[0].strip()
            if lab not in ("X", "Y"):
                raise DataSchemaError(f"{path}: line {line}: label must be X or Y, got {lab!r}")
            try:
                nums = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataSchemaError(f"{path}: line {line}: {exc}") from None
            if not all(math.isfinite(v) for v in nums):
                raise DataSchemaError(f"{path}: line {line}: non-finite value")
            labels.append(lab)
            values.append(nums)
    if not values:
        raise DataSchemaError(f"{path}: no data rows")
    values = np.array(values)
    return DataSet(values[:, d:], values[:, :d], labels)


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_plot_data(path, rows, d) -> None:
    """Tidy table with columns ``u1..ud, coordinate, value, series``.

    ``rows`` yields ``(u, series, vector)``; each vector entry becomes one row.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"u{j + 1}" for j in range(d)] + ["coordinate", "value", "series"])
        for u, series, vec in rows:
            ucols = [format_number(v) for v in np.atleast_1d(u)]
            for j, v in enumerate(vec, start=1):
                w.writerow(ucols + [j, format_number(v), series])
