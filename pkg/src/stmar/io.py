"""
Delimited-text input and output: series, parameter files and key=value configs.
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DomainError, IngestionError
from .model import params_from_text, params_to_text

__all__ = [
    "DataSet",
    "ingest",
    "write_series",
    "read_params",
    "write_params",
    "read_config",
]


@dataclass(frozen=True)
class DataSet:
    values: np.ndarray
    labels: Optional[list] = None
    transform_applied: str = "none"


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest(path, column=None, transform="none", delimiter=","):
    """Read one numeric column from a delimited text file.

    Parameters
    ----------
    path : str or path-like
    column : int or str, optional
        0-based column index or header name; defaults to the last column.
    transform : {"none", "log"}
        ``"log"`` takes natural logs and requires strictly positive values.
    delimiter : str

    A header row is detected when the selected cell of the first row is not
    numeric. When the file has more than one column, the first column is kept
    as labels.
    """
    if transform not in ("none", "log"):
        raise ValueError(f"transform must be 'none' or 'log', got {transform!r}")
    with open(path, newline="") as fh:
        rows = [(n, r) for n, r in enumerate(csv.reader(fh, delimiter=delimiter), start=1)
                if r and any(c.strip() for c in r)]
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    first_line, first = rows[0]
    header = None
    if isinstance(column, str):
        header = [c.strip() for c in first]
        if column not in header:
            raise IngestionError(f"{path}: no column named {column!r}")
        col = header.index(column)
        rows = rows[1:]
    else:
        col = len(first) - 1 if column is None else int(column)
        if col >= len(first) or col < -len(first):
            raise IngestionError(f"{path}: column {col} out of range")
        if not _is_number(first[col].strip()):
            header = [c.strip() for c in first]
            rows = rows[1:]

    values, labels = [], []
    for line, row in rows:
        if col >= len(row) or not row[col].strip():
            raise IngestionError(f"{path}: line {line}, column {col}: missing value")
        cell = row[col].strip()
        try:
            v = float(cell)
        except ValueError:
            raise IngestionError(
                f"{path}: line {line}, column {col}: cannot parse {cell!r}"
            ) from None
        if not math.isfinite(v):
            raise IngestionError(f"{path}: line {line}, column {col}: non-finite value {cell!r}")
        if transform == "log":
            if v <= 0:
                raise DomainError(f"{path}: line {line}: log of nonpositive value {cell!r}")
            v = math.log(v)
        values.append(v)
        if len(row) > 1:
            labels.append(row[0].strip())
    if not values:
        raise IngestionError(f"{path}: no data rows")
    return DataSet(np.array(values), labels or None, transform)


def write_series(path, values, labels=None, name="value"):
    """Write ``label,value`` rows (labels default to 1-based indices)."""
    values = np.asarray(values, dtype=float)
    labels = labels if labels is not None else range(1, values.size + 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", name])
        for lab, v in zip(labels, values):
            w.writerow([lab, f"{v:.12g}"])


def write_params(path, params):
    with open(path, "w") as fh:
        fh.write(f"# StMAR({params.p},{params.M}): p,M,theta\n")
        fh.write(params_to_text(params))


def read_params(path):
    with open(path) as fh:
        return params_from_text(fh.read())


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise IngestionError(f"{path}: line {n}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
