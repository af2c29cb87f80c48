"""Delimited table and JSON emission (17 significant digits, round-trippable)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_table(path: str | Path, columns: dict[str, np.ndarray], delimiter: str = ",") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float) for k in names]
    n = len(data[0])
    if any(len(col) != n for col in data):
        raise ValueError("columns have different lengths")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\r\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([fmt(col[i]) for col in data])
    return path


def read_table(path: str | Path, delimiter: str = ",") -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    header, body = rows[0], rows[1:]
    arr = np.array([[float(x) for x in row] for row in body])
    return {name: arr[:, i] for i, name in enumerate(header)}


def write_json(path: str | Path, doc: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, default=_default) + "\n", encoding="utf-8")
    return path


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
