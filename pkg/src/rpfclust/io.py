"""CSV and JSON file formats.

Curves: one curve per row, comma separated. An optional first row starting
with ``#t`` carries the time grid; without it the grid is 1..n.
Matrices (coefficients, memberships): plain numeric CSV, one row per curve.
Labels: one integer per line.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import FormatError
from .smoothing import CurveSet, TimeGrid

GRID_PREFIX = "#t"


def _parse_row(cells, lineno, path):
    out = []
    for col, cell in enumerate(cells, start=1):
        try:
            out.append(float(cell))
        except ValueError:
            raise FormatError(f"{path}: non-numeric value {cell!r} at row {lineno}, column {col}") from None
    return out


def _read_rows(path):
    with open(path, newline="") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in cells]
            if not cells or all(c == "" for c in cells):
                continue
            yield lineno, cells


def read_matrix(path) -> np.ndarray:
    rows = []
    width = None
    for lineno, cells in _read_rows(path):
        if cells[0].startswith("#"):
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: row {lineno} has {len(cells)} values, expected {width}")
        rows.append(_parse_row(cells, lineno, path))
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def ingest_curves(path) -> CurveSet:
    grid = None
    rows = []
    width = None
    for lineno, cells in _read_rows(path):
        if cells[0] == GRID_PREFIX and grid is None and not rows:
            grid = _parse_row(cells[1:], lineno, path)
            width = len(grid)
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: row {lineno} has {len(cells)} values, expected {width}")
        rows.append(_parse_row(cells, lineno, path))
    if not rows:
        raise FormatError(f"{path}: no curves found")
    Y = np.array(rows, dtype=float)
    points = np.arange(1, Y.shape[1] + 1, dtype=float) if grid is None else np.array(grid)
    return CurveSet(Y, TimeGrid(points))


def _fmt(x):
    return repr(float(x))


def write_curves(curves: CurveSet, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([GRID_PREFIX] + [_fmt(t) for t in curves.grid.points])
        w.writerows([[_fmt(v) for v in row] for row in curves.Y])


def write_matrix(M, path):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows([[_fmt(v) for v in row] for row in M])


def write_labels(labels, path):
    labels = np.asarray(getattr(labels, "labels", labels)).ravel()
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


def read_labels(path) -> np.ndarray:
    out = []
    for lineno, cells in _read_rows(path):
        if len(cells) != 1:
            raise FormatError(f"{path}: row {lineno} should hold a single label")
        try:
            out.append(int(float(cells[0])))
        except ValueError:
            raise FormatError(f"{path}: non-numeric label {cells[0]!r} at row {lineno}") from None
    return np.array(out, dtype=int)


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_report(result, out_dir):
    """Write labels.csv, membership.csv and report.json into ``out_dir``."""
    out = Path(out_dir)
    try:
        os.makedirs(out, exist_ok=True)
        write_labels(result.labels, out / "labels.csv")
        write_matrix(result.membership, out / "membership.csv")
        write_json(result.to_dict(), out / "report.json")
    except OSError as exc:
        raise OSError(f"could not write results to {out}: {exc}") from exc
    return {name: out / name for name in ("labels.csv", "membership.csv", "report.json")}
