"""CSV interchange (``group,item_1,...,item_d``; empty field = missing) and canonical JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import SCALE_MAX, SCALE_MIN, InputError, QuestionnaireMatrix, validate
from .pipeline import canonical


def _cell(v: float) -> str:
    if math.isnan(v):
        return ""
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def format_csv(matrix: QuestionnaireMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group"] + [f"item_{j + 1}" for j in range(matrix.n_items)])
    for g, row in zip(matrix.group_labels, matrix.values):
        w.writerow([g] + [_cell(v) for v in row])
    return buf.getvalue()


def write_csv(matrix: QuestionnaireMatrix, path) -> None:
    Path(path).write_text(format_csv(matrix), encoding="utf-8")


def parse_csv(text: str, scale_min: int = SCALE_MIN, scale_max: int = SCALE_MAX) -> QuestionnaireMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise InputError("empty CSV: expected a header 'group,item_1,...'")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "group":
        raise InputError("line 1: header must start with 'group' followed by item columns")
    d = len(header) - 1
    if len(rows) == 1:
        raise InputError("CSV has a header but no data rows")
    labels, values = [], []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != d + 1:
            raise InputError(f"line {lineno}: expected {d + 1} fields, got {len(r)}")
        if not r[0].strip():
            raise InputError(f"line {lineno}, column 1: missing group label")
        labels.append(r[0].strip())
        vals = []
        for col, cell in enumerate(r[1:], start=2):
            cell = cell.strip()
            if cell == "":
                vals.append(np.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"line {lineno}, column {col}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"line {lineno}, column {col}: non-finite value {cell!r}")
            vals.append(v)
        values.append(vals)
    matrix = QuestionnaireMatrix(np.array(values, dtype=float), tuple(labels), scale_min, scale_max)
    problems = validate(matrix)
    if problems:
        raise InputError("; ".join(problems[:5]) + (" ..." if len(problems) > 5 else ""))
    return matrix


def read_csv(path, scale_min: int = SCALE_MIN, scale_max: int = SCALE_MAX) -> QuestionnaireMatrix:
    return parse_csv(Path(path).read_text(encoding="utf-8"), scale_min, scale_max)


def dumps_canonical(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
